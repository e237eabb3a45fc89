#pragma once

#include <algorithm>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rayen/rayen.hpp"

namespace rayen::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_verify = 3 };

struct Tolerances {
  double rank_tol = 0.0;
  double redundancy_rel = 1e-9;
  double equality_rel = 1e-8;
  double interior_min_margin = 1e-6;
  double lmi_budget = 2e8;
  double kappa_zero_tol = 1e-12;
  double parametric_strict = 1e-9;
};

inline void add_tolerance_flags(CLI::App* cmd, Tolerances& t) {
  cmd->add_option("--rank-tol", t.rank_tol, "null-space rank tolerance (0 = 1e-10 max(m,k))")->envname("RAYEN_RANK_TOL");
  cmd->add_option("--redundancy-tol", t.redundancy_rel, "relative redundancy tolerance")
      ->envname("RAYEN_REDUNDANCY_TOL");
  cmd->add_option("--equality-tol", t.equality_rel, "relative implicit-equality tolerance")
      ->envname("RAYEN_EQUALITY_TOL");
  cmd->add_option("--min-margin", t.interior_min_margin, "smallest accepted normalized interior margin")
      ->envname("RAYEN_MIN_MARGIN");
  cmd->add_option("--lmi-budget", t.lmi_budget, "max n*r^2 scalars for the conjugated LMI basis")
      ->envname("RAYEN_LMI_BUDGET");
  cmd->add_option("--kappa-zero-tol", t.kappa_zero_tol, "kappa below this means an unbounded ray")
      ->envname("RAYEN_KAPPA_ZERO_TOL");
  cmd->add_option("--strict-tol", t.parametric_strict, "margin required by --parametric")
      ->envname("RAYEN_STRICT_TOL");
}

inline CompileOptions compile_options(const Tolerances& t) {
  CompileOptions o;
  o.preprocess.rank_tol = t.rank_tol;
  o.preprocess.redundancy_rel = t.redundancy_rel;
  o.preprocess.equality_rel = t.equality_rel;
  o.interior.min_margin = t.interior_min_margin;
  o.lmi_memory_budget = t.lmi_budget;
  o.mapper.kappa_zero_tol = t.kappa_zero_tol;
  return o;
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_text(path, text);
  }
}

inline std::string kappa_csv(const std::vector<KappaBreakdown>& ks) {
  std::string s = "kappa_linear,kappa_quadratic,kappa_soc,kappa_lmi,kappa\n";
  for (const auto& k : ks) {
    for (double x : {k.kappa_linear, k.kappa_quadratic, k.kappa_soc, k.kappa_lmi}) {
      io::append_double(s, x);
      s.push_back(',');
    }
    io::append_double(s, k.kappa);
    s.push_back('\n');
  }
  return s;
}

/// Runs one subcommand. args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Compile convex constraint sets and map vectors into them by ray scaling", "rayen"};
  app.require_subcommand(1);
  Tolerances tol;

  auto* compile = app.add_subcommand("compile", "spec JSON -> plan JSON");
  std::string spec_path, plan_out, report_out;
  bool parametric = false;
  compile->add_option("spec", spec_path, "constraint-spec JSON")->required();
  compile->add_option("-o,--output", plan_out, "plan output (default stdout)");
  compile->add_option("--report", report_out, "compile report JSON");
  compile->add_flag("--parametric", parametric, "z0 = 0 mode; no LP stage");
  add_tolerance_flags(compile, tol);

  auto* map = app.add_subcommand("map", "plan + batch -> mapped batch");
  std::string plan_path, batch_path, map_out, kappa_out, format = "csv", map_spec, kernel = "rowwise";
  int threads = 1;
  map->add_option("plan", plan_path, "plan JSON")->required();
  map->add_option("batch", batch_path, "input batch (CSV or binary)")->required();
  map->add_option("-o,--output", map_out, "output batch (default stdout)");
  map->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "bin"}));
  map->add_option("--kappas", kappa_out, "per-row kappa breakdown CSV");
  map->add_option("--spec", map_spec, "check the plan's source hash against this spec");
  map->add_option("--threads", threads, "worker threads")->envname("RAYEN_THREADS")->check(CLI::PositiveNumber);
  map->add_option("--kernel", kernel, "batch kernel")->check(CLI::IsMember({"rowwise", "blocked"}));

  auto* verify = app.add_subcommand("verify", "plan + spec -> verification report");
  std::string verify_plan_path, verify_spec, verify_out;
  Index samples = 2000;
  std::uint64_t seed = 1;
  VerifyOptions vopt;
  verify->add_option("plan", verify_plan_path, "plan JSON")->required();
  verify->add_option("spec", verify_spec, "constraint-spec JSON")->required();
  verify->add_option("-n,--samples", samples, "membership samples")->envname("RAYEN_SAMPLES");
  verify->add_option("--seed", seed, "random seed")->envname("RAYEN_SEED");
  verify->add_option("-o,--output", verify_out, "report JSON (default stdout)");
  verify->add_option("--member-tol", vopt.member_tol, "membership tolerance")->envname("RAYEN_MEMBER_TOL");
  verify->add_option("--kappa-tol", vopt.kappa_tol, "kappa agreement tolerance")->envname("RAYEN_KAPPA_TOL");
  verify->add_option("--roundtrip-tol", vopt.roundtrip_tol, "invert/map tolerance")->envname("RAYEN_ROUNDTRIP_TOL");
  verify->add_option("--directions", vopt.kappa_directions, "directions per family for the kappa check");
  verify->add_option("--roundtrip-points", vopt.roundtrip_points, "hit-and-run points for the round trip");

  auto* bench = app.add_subcommand("bench", "time map_batch on random sets");
  BenchOptions bopt;
  std::string bench_out, bench_kind = "sweep", bench_kernel = "blocked";
  Index bk = 0;
  FactorySizes bsizes;
  bench->add_option("--kind", bench_kind, "sweep, or one of linear/quadratic/soc/lmi/mixed")
      ->check(CLI::IsMember({"sweep", "linear", "quadratic", "soc", "lmi", "mixed"}));
  bench->add_option("-k", bk, "ambient dimension for a single case");
  bench->add_option("-r,--rows", bsizes.linear_rows, "linear rows");
  bench->add_option("--eta", bsizes.quadratics, "quadratic count");
  bench->add_option("--mu", bsizes.socs, "SOC count");
  bench->add_option("--soc-rows", bsizes.soc_rows, "rows of each SOC matrix");
  bench->add_option("--rf", bsizes.lmi_size, "LMI size");
  bench->add_option("--batch", bopt.batch, "samples per batch");
  bench->add_option("--warmup", bopt.warmup, "untimed batches");
  bench->add_option("--repeats", bopt.repeats, "timed batches");
  bench->add_option("--threads", bopt.threads, "worker threads")->envname("RAYEN_THREADS")->check(CLI::PositiveNumber);
  bench->add_option("--kernel", bench_kernel, "batch kernel")->check(CLI::IsMember({"rowwise", "blocked"}));
  bench->add_option("--seed", bopt.seed, "random seed");
  bench->add_option("-o,--output", bench_out, "BenchRecord CSV (default stdout)");

  auto* sample = app.add_subcommand("sample", "plan -> cloud of mapped points");
  std::string sample_plan, sample_out;
  Index count = 12000;
  double half_width = 2.5;
  std::uint64_t sample_seed = 1;
  sample->add_option("plan", sample_plan, "plan JSON")->required();
  sample->add_option("-n,--count", count, "number of samples");
  sample->add_option("--half-width", half_width, "v drawn from [-h, h]^n");
  sample->add_option("--seed", sample_seed, "random seed")->envname("RAYEN_SEED");
  sample->add_option("-o,--output", sample_out, "y-cloud CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_ok;
    }
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (*compile) {
      ConstraintSet cs = io::load_spec(spec_path);
      CompileReport rep;
      ProjectionPlan plan;
      if (parametric) {
        ParametricOptions po;
        po.strict_tol = tol.parametric_strict;
        po.compile = compile_options(tol);
        plan = build_parametric_plan(cs, po);
        rep.k = plan.k;
        rep.n = plan.n;
        rep.epsilon = plan.interior_margin;
      } else {
        plan = compile_plan(cs, compile_options(tol), &rep);
      }
      emit(plan_out, io::dump(io::plan_to_json(plan)), out);
      if (!report_out.empty()) io::write_text(report_out, io::dump(io::compile_report_to_json(rep)));
      return exit_ok;
    }
    if (*map) {
      ProjectionPlan plan = io::load_plan(plan_path);
      if (!map_spec.empty()) require_same_source(plan, io::load_spec(map_spec));
      const Matrix V = io::load_batch(batch_path);
      if (V.rows() > 0 && V.cols() != plan.n) {
        throw Error(Stage::io, ErrorCode::dimension_mismatch,
                    "batch has " + std::to_string(V.cols()) + " columns, plan expects " + std::to_string(plan.n));
      }
      Matrix Y(V.rows(), plan.k);
      std::vector<KappaBreakdown> ks;
      if (kernel == "blocked") {
        BatchOptions bo;
        bo.threads = threads;
        bo.kernel = BatchKernel::blocked;
        auto res = map_batch_matrix(plan, V, bo);
        Y = std::move(res.Y);
        if (!kappa_out.empty()) {
          // the blocked kernel only keeps the combined kappa
          for (Index i = 0; i < V.rows(); ++i) ks.push_back(compute_kappas(plan, V.row(i).normalized().transpose()));
        }
      } else {
        const auto res = map_batch(plan, V, threads);
        for (Index i = 0; i < V.rows(); ++i) {
          Y.row(i) = res[static_cast<std::size_t>(i)].y.transpose();
          ks.push_back(res[static_cast<std::size_t>(i)].kappas);
        }
      }
      emit(map_out, format == "bin" ? io::matrix_to_binary(Y) : io::matrix_to_csv(Y), out);
      if (!kappa_out.empty()) io::write_text(kappa_out, kappa_csv(ks));
      return exit_ok;
    }
    if (*verify) {
      const ProjectionPlan plan = io::load_plan(verify_plan_path);
      const ConstraintSet cs = io::load_spec(verify_spec);
      const auto rep = verify_plan(plan, cs, samples, seed, vopt);
      emit(verify_out, io::dump(io::verification_to_json(rep)), out);
      if (!rep.passed) {
        err << "verification failed";
        for (const auto& n : rep.notes) err << "; " << n;
        err << "\n";
        return exit_verify;
      }
      return exit_ok;
    }
    if (*bench) {
      bopt.kernel = bench_kernel == "rowwise" ? BatchKernel::rowwise : BatchKernel::blocked;
      std::string csv = bench_csv_header();
      if (bench_kind == "sweep") {
        for (const auto& pt : reduced_sweep()) csv += bench_csv_row(bench_case(pt.kind, pt.k, pt.sizes, bopt));
      } else {
        const FactoryKind kind = bench_kind == "linear"      ? FactoryKind::linear
                                 : bench_kind == "quadratic" ? FactoryKind::quadratic
                                 : bench_kind == "soc"       ? FactoryKind::soc
                                 : bench_kind == "lmi"       ? FactoryKind::lmi
                                                             : FactoryKind::mixed;
        if (bk < 1) throw CLI::ValidationError("-k", "a single bench case needs -k >= 1");
        const FactorySizes dflt = default_sizes(kind, bk);
        FactorySizes s = bsizes;
        if (s.linear_rows == 0) s.linear_rows = dflt.linear_rows;
        if (s.quadratics == 0) s.quadratics = dflt.quadratics;
        if (s.socs == 0) s.socs = dflt.socs;
        if (s.soc_rows == 0) s.soc_rows = dflt.soc_rows;
        if (s.lmi_size == 0) s.lmi_size = dflt.lmi_size;
        csv += bench_csv_row(bench_case(kind, bk, s, bopt));
      }
      emit(bench_out, csv, out);
      return exit_ok;
    }
    if (*sample) {
      const ProjectionPlan plan = io::load_plan(sample_plan);
      if (count < 0 || !(half_width >= 0.0)) throw Error(Stage::io, ErrorCode::invalid_input, "bad count or half-width");
      CounterRng rng(sample_seed);
      Matrix V(count, plan.n);
      for (Index i = 0; i < count; ++i) V.row(i) = rng.uniform_vector(plan.n, -half_width, half_width).transpose();
      const auto res = map_batch_matrix(plan, V);
      emit(sample_out, io::matrix_to_csv(res.Y), out);
      return exit_ok;
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_data;
  } catch (const std::exception& e) {
    err << "error: [io] " << e.what() << "\n";
    return exit_data;
  }
  return exit_usage;
}

}  // namespace rayen::cli

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "rayen/mapper.hpp"
#include "rayen/oracle.hpp"
#include "rayen/preprocess.hpp"

namespace rayen {

struct BenchRecord {
  std::string kind;
  Index k = 0;
  Index n = 0;
  FactorySizes sizes;
  Index batch = 0;
  double median_us = 0.0;  ///< per sample
  double p95_us = 0.0;     ///< per sample
  double total_ms = 0.0;   ///< wall time of all timed batches
};

struct BenchOptions {
  Index batch = 2000;
  int warmup = 3;
  int repeats = 5;
  int threads = 1;
  BatchKernel kernel = BatchKernel::blocked;
  std::uint64_t seed = 1;
};

/// Times map_batch_matrix on a parametric plan (z0 = 0, so no LP stage) of
/// a random set. Only the mapping call is inside the timed region.
inline BenchRecord bench_plan(const ProjectionPlan& plan, const std::string& kind, const FactorySizes& sizes,
                              const BenchOptions& opt) {
  CounterRng rng(opt.seed ^ 0xB3C4);
  Matrix V(opt.batch, plan.n);
  for (Index i = 0; i < V.rows(); ++i) V.row(i) = rng.uniform_vector(plan.n, -2.5, 2.5).transpose();
  BatchOptions bo;
  bo.threads = opt.threads;
  bo.kernel = opt.kernel;
  for (int w = 0; w < opt.warmup; ++w) (void)map_batch_matrix(plan, V, bo);
  std::vector<double> per_sample;
  double total = 0.0;
  for (int r = 0; r < std::max(1, opt.repeats); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = map_batch_matrix(plan, V, bo);
    const auto t1 = std::chrono::steady_clock::now();
    const double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    total += us;
    per_sample.push_back(us / static_cast<double>(std::max<Index>(1, opt.batch)));
    if (out.Y.rows() != opt.batch) throw Error(Stage::mapper, ErrorCode::invalid_input, "bench: short batch");
  }
  std::sort(per_sample.begin(), per_sample.end());
  BenchRecord rec;
  rec.kind = kind;
  rec.k = plan.k;
  rec.n = plan.n;
  rec.sizes = sizes;
  rec.batch = opt.batch;
  rec.median_us = per_sample[per_sample.size() / 2];
  const std::size_t p95 = std::min(per_sample.size() - 1,
                                   static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(per_sample.size()))) - 1);
  rec.p95_us = per_sample[p95];
  rec.total_ms = total / 1000.0;
  return rec;
}

inline BenchRecord bench_case(FactoryKind kind, Index k, const FactorySizes& sizes, const BenchOptions& opt) {
  const ProjectionPlan plan = build_parametric_plan(random_constraint_factory(kind, k, sizes, opt.seed, true));
  return bench_plan(plan, to_string(kind), sizes, opt);
}

struct SweepPoint {
  FactoryKind kind;
  Index k;
  FactorySizes sizes;
  std::string axis;  ///< the size being varied: k, r, eta, mu or r_F
};

/// Reduced-scale grid along each axis of the timing study, sizes spaced 4x.
inline std::vector<SweepPoint> reduced_sweep() {
  std::vector<SweepPoint> pts;
  for (Index k : {64, 256, 1024}) pts.push_back({FactoryKind::linear, k, {.linear_rows = 256}, "k"});
  for (Index r : {64, 256, 1024}) pts.push_back({FactoryKind::linear, 512, {.linear_rows = r}, "r"});
  for (Index k : {16, 64, 256}) pts.push_back({FactoryKind::quadratic, k, {.quadratics = 8}, "k"});
  for (Index eta : {4, 16, 64}) pts.push_back({FactoryKind::quadratic, 64, {.quadratics = eta}, "eta"});
  for (Index k : {16, 64, 256}) pts.push_back({FactoryKind::soc, k, {.socs = 8, .soc_rows = 32}, "k"});
  for (Index mu : {4, 16, 64}) pts.push_back({FactoryKind::soc, 64, {.socs = mu, .soc_rows = 32}, "mu"});
  for (Index k : {8, 32, 128}) pts.push_back({FactoryKind::lmi, k, {.lmi_size = 16}, "k"});
  for (Index rf : {4, 16, 64}) pts.push_back({FactoryKind::lmi, 32, {.lmi_size = rf}, "r_F"});
  return pts;
}

inline std::string bench_csv_header() {
  return "kind,k,n,r,eta,mu,r_M,r_F,batch,median_us,p95_us,total_ms\n";
}

inline std::string bench_csv_row(const BenchRecord& r) {
  return r.kind + "," + std::to_string(r.k) + "," + std::to_string(r.n) + "," + std::to_string(r.sizes.linear_rows) +
         "," + std::to_string(r.sizes.quadratics) + "," + std::to_string(r.sizes.socs) + "," +
         std::to_string(r.sizes.soc_rows) + "," + std::to_string(r.sizes.lmi_size) + "," + std::to_string(r.batch) +
         "," + std::to_string(r.median_us) + "," + std::to_string(r.p95_us) + "," + std::to_string(r.total_ms) + "\n";
}

}  // namespace rayen

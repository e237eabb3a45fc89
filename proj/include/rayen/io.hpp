#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rayen/constraint_model.hpp"
#include "rayen/oracle.hpp"
#include "rayen/plan.hpp"
#include "rayen/preprocess.hpp"

namespace rayen::io {

using json = nlohmann::json;

inline constexpr int plan_format_version = 1;

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) {
  throw Error(Stage::io, ErrorCode::malformed_file, what);
}

inline json nested(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline json array(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) malformed(what + ": expected a number");
  return j.get<double>();
}

inline Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) malformed(what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number(j[i], what);
  return v;
}

/// Nested row-major arrays; `cols` fixes the width of an empty matrix.
inline Matrix to_nested_matrix(const json& j, const std::string& what, Index cols = -1) {
  if (!j.is_array()) malformed(what + ": expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return Matrix(0, cols < 0 ? 0 : cols);
  if (!j[0].is_array()) malformed(what + ": expected an array of rows");
  const Index c = static_cast<Index>(j[0].size());
  if (cols >= 0 && c != cols) malformed(what + ": expected " + std::to_string(cols) + " columns");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) malformed(what + ": ragged rows");
    for (Index k = 0; k < c; ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], what);
  }
  return m;
}

/// {"shape": [r, c], "data": [row-major]}.
inline json shaped(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline Matrix to_shaped_matrix(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) malformed(what + ": expected shape and data");
  const auto& shape = j["shape"];
  const auto& data = j["data"];
  if (!shape.is_array() || shape.size() != 2 || !data.is_array()) malformed(what + ": bad shape");
  const Index r = shape[0].get<Index>();
  const Index c = shape[1].get<Index>();
  if (r < 0 || c < 0 || static_cast<Index>(data.size()) != r * c) malformed(what + ": data length does not match shape");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = number(data[static_cast<std::size_t>(i * c + k)], what);
  return m;
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) malformed(where + ": missing field '" + key + "'");
  return j[key];
}

inline std::string hex64(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

inline std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t h = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), h, 16);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) malformed("bad hash string '" + s + "'");
  return h;
}

}  // namespace detail

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::malformed("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::malformed("cannot write '" + path + "'");
  out << text;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    detail::malformed(what + ": " + e.what());
  }
}

// ---- constraint-spec documents ----

inline json spec_to_json(const ConstraintSet& cs) {
  json j;
  j["k"] = cs.k;
  if (cs.has_linear()) {
    json lin = json::object();
    if (cs.linear.has_inequalities()) {
      lin["A1"] = detail::nested(cs.linear.A1);
      lin["b1"] = detail::array(cs.linear.b1);
    }
    if (cs.linear.has_equalities()) {
      lin["A2"] = detail::nested(cs.linear.A2);
      lin["b2"] = detail::array(cs.linear.b2);
    }
    j["linear"] = std::move(lin);
  }
  if (cs.has_quadratics()) {
    json qs = json::array();
    for (const auto& q : cs.quadratics) qs.push_back({{"P", detail::nested(q.P)}, {"q", detail::array(q.q)}, {"r", q.r}});
    j["quadratics"] = std::move(qs);
  }
  if (cs.has_socs()) {
    json ss = json::array();
    for (const auto& s : cs.socs) {
      ss.push_back({{"M", detail::nested(s.M)}, {"s", detail::array(s.s)}, {"c", detail::array(s.c)}, {"d", s.d}});
    }
    j["socs"] = std::move(ss);
  }
  if (cs.lmi) {
    json fs = json::array();
    for (const auto& F : cs.lmi->F) fs.push_back(detail::nested(F));
    j["lmi"] = {{"F", std::move(fs)}};
  }
  return j;
}

inline ConstraintSet spec_from_json(const json& j) {
  if (!j.is_object()) detail::malformed("spec: expected an object");
  ConstraintSet cs;
  const auto& kj = detail::field(j, "k", "spec");
  if (!kj.is_number_integer()) detail::malformed("spec: k must be an integer");
  cs.k = kj.get<Index>();
  if (j.contains("linear")) {
    const auto& lin = j["linear"];
    if (lin.contains("A1")) {
      cs.linear.A1 = detail::to_nested_matrix(lin["A1"], "linear.A1", cs.k);
      cs.linear.b1 = detail::to_vector(detail::field(lin, "b1", "linear"), "linear.b1");
    }
    if (lin.contains("A2")) {
      cs.linear.A2 = detail::to_nested_matrix(lin["A2"], "linear.A2", cs.k);
      cs.linear.b2 = detail::to_vector(detail::field(lin, "b2", "linear"), "linear.b2");
    }
  }
  if (j.contains("quadratics")) {
    for (const auto& q : j["quadratics"]) {
      QuadraticConstraint qc;
      qc.P = detail::to_nested_matrix(detail::field(q, "P", "quadratic"), "quadratic.P");
      qc.q = detail::to_vector(detail::field(q, "q", "quadratic"), "quadratic.q");
      qc.r = detail::number(detail::field(q, "r", "quadratic"), "quadratic.r");
      cs.quadratics.push_back(std::move(qc));
    }
  }
  if (j.contains("socs")) {
    for (const auto& s : j["socs"]) {
      SocConstraint sc;
      sc.M = detail::to_nested_matrix(detail::field(s, "M", "soc"), "soc.M");
      sc.s = detail::to_vector(detail::field(s, "s", "soc"), "soc.s");
      sc.c = detail::to_vector(detail::field(s, "c", "soc"), "soc.c");
      sc.d = detail::number(detail::field(s, "d", "soc"), "soc.d");
      cs.socs.push_back(std::move(sc));
    }
  }
  if (j.contains("lmi")) {
    LmiConstraint L;
    for (const auto& F : detail::field(j["lmi"], "F", "lmi")) L.F.push_back(detail::to_nested_matrix(F, "lmi.F"));
    cs.lmi = std::move(L);
  }
  return cs;
}

inline ConstraintSet load_spec(const std::string& path) {
  return spec_from_json(parse_json(read_text(path), path));
}

// ---- plan documents ----

inline json plan_to_json(const ProjectionPlan& p) {
  json j;
  j["format"] = "rayen-plan";
  j["version"] = plan_format_version;
  j["k"] = p.k;
  j["n"] = p.n;
  j["source_hash"] = detail::hex64(p.source_hash);
  j["parametric"] = p.parametric;
  j["interior_margin"] = p.interior_margin;
  j["affine"] = {{"identity", p.map.identity},
                 {"N", detail::shaped(p.map.N)},
                 {"y_p", detail::array(p.map.y_p)},
                 {"A_E", detail::shaped(p.A_E)},
                 {"b_E", detail::array(p.b_E)}};
  j["z0"] = detail::array(p.z0);
  j["y0"] = detail::array(p.y0);
  j["A_p"] = detail::shaped(p.A_p);
  j["b_p"] = detail::array(p.b_p);
  j["D"] = detail::shaped(p.D);
  json qs = json::array();
  for (const auto& q : p.quadratics) qs.push_back({{"a", q.a}, {"w", detail::array(q.w)}, {"P", detail::shaped(q.P)}});
  j["quadratics"] = std::move(qs);
  json ss = json::array();
  for (const auto& s : p.socs) {
    ss.push_back({{"u", detail::array(s.u)}, {"W", detail::shaped(s.W)}, {"e", s.e}, {"phi", detail::array(s.phi)}});
  }
  j["socs"] = std::move(ss);
  if (p.lmi) {
    j["lmi"] = {{"r", p.lmi->r},
                {"R", detail::shaped(p.lmi->R)},
                {"basis", detail::shaped(p.lmi->basis_flat)},
                {"conjugated", p.lmi->conjugated}};
  } else {
    j["lmi"] = nullptr;
  }
  const auto& m = p.mapper;
  j["mapper"] = {{"kappa_zero_tol", m.kappa_zero_tol},
                 {"eig_method", static_cast<int>(m.eig.method)},
                 {"eig_dense_max_size", m.eig.dense_max_size},
                 {"eig_tol", m.eig.tol},
                 {"eig_max_iterations", m.eig.max_iterations}};
  return j;
}

inline ProjectionPlan plan_from_json(const json& j) {
  using detail::field;
  if (!j.is_object() || j.value("format", "") != "rayen-plan") detail::malformed("plan: not a plan document");
  if (j.value("version", -1) != plan_format_version) detail::malformed("plan: unsupported version");
  ProjectionPlan p;
  try {
    p.k = field(j, "k", "plan").get<Index>();
    p.n = field(j, "n", "plan").get<Index>();
    p.source_hash = detail::parse_hex64(field(j, "source_hash", "plan").get<std::string>());
    p.parametric = field(j, "parametric", "plan").get<bool>();
    p.interior_margin = detail::number(field(j, "interior_margin", "plan"), "interior_margin");
    const auto& aff = field(j, "affine", "plan");
    p.map.k = p.k;
    p.map.n = p.n;
    p.map.identity = field(aff, "identity", "affine").get<bool>();
    p.map.N = detail::to_shaped_matrix(field(aff, "N", "affine"), "N");
    p.map.y_p = detail::to_vector(field(aff, "y_p", "affine"), "y_p");
    p.A_E = detail::to_shaped_matrix(field(aff, "A_E", "affine"), "A_E");
    p.b_E = detail::to_vector(field(aff, "b_E", "affine"), "b_E");
    p.z0 = detail::to_vector(field(j, "z0", "plan"), "z0");
    p.y0 = detail::to_vector(field(j, "y0", "plan"), "y0");
    p.A_p = detail::to_shaped_matrix(field(j, "A_p", "plan"), "A_p");
    p.b_p = detail::to_vector(field(j, "b_p", "plan"), "b_p");
    p.D = detail::to_shaped_matrix(field(j, "D", "plan"), "D");
    for (const auto& q : field(j, "quadratics", "plan")) {
      QuadraticCache c;
      c.a = detail::number(field(q, "a", "quadratic"), "a");
      c.w = detail::to_vector(field(q, "w", "quadratic"), "w");
      c.P = detail::to_shaped_matrix(field(q, "P", "quadratic"), "P");
      p.quadratics.push_back(std::move(c));
    }
    for (const auto& s : field(j, "socs", "plan")) {
      SocCache c;
      c.u = detail::to_vector(field(s, "u", "soc"), "u");
      c.W = detail::to_shaped_matrix(field(s, "W", "soc"), "W");
      c.e = detail::number(field(s, "e", "soc"), "e");
      c.phi = detail::to_vector(field(s, "phi", "soc"), "phi");
      p.socs.push_back(std::move(c));
    }
    const auto& lj = field(j, "lmi", "plan");
    if (!lj.is_null()) {
      LmiCache c;
      c.r = field(lj, "r", "lmi").get<Index>();
      c.R = detail::to_shaped_matrix(field(lj, "R", "lmi"), "R");
      c.basis_flat = detail::to_shaped_matrix(field(lj, "basis", "lmi"), "basis");
      c.conjugated = field(lj, "conjugated", "lmi").get<bool>();
      p.lmi = std::move(c);
    }
    const auto& mj = field(j, "mapper", "plan");
    p.mapper.kappa_zero_tol = detail::number(field(mj, "kappa_zero_tol", "mapper"), "kappa_zero_tol");
    p.mapper.eig.method = static_cast<EigMethod>(field(mj, "eig_method", "mapper").get<int>());
    p.mapper.eig.dense_max_size = field(mj, "eig_dense_max_size", "mapper").get<Index>();
    p.mapper.eig.tol = detail::number(field(mj, "eig_tol", "mapper"), "eig_tol");
    p.mapper.eig.max_iterations = field(mj, "eig_max_iterations", "mapper").get<int>();
  } catch (const json::exception& e) {
    detail::malformed(std::string("plan: ") + e.what());
  }

  // shape checks, so a damaged document fails here rather than in the mapper
  auto expect = [](bool ok, const char* what) {
    if (!ok) detail::malformed(std::string("plan: inconsistent shape of ") + what);
  };
  expect(p.k >= 1 && p.n >= 0 && p.n <= p.k, "k/n");
  expect(p.map.y_p.size() == p.k, "y_p");
  expect(p.map.identity ? (p.n == p.k && p.map.N.size() == 0) : (p.map.N.rows() == p.k && p.map.N.cols() == p.n), "N");
  expect(p.z0.size() == p.n && p.y0.size() == p.k, "z0/y0");
  expect(p.A_E.cols() == p.k && p.b_E.size() == p.A_E.rows(), "A_E");
  expect(p.A_p.cols() == p.n && p.b_p.size() == p.A_p.rows(), "A_p");
  expect(p.D.rows() == p.A_p.rows() && p.D.cols() == p.n, "D");
  for (const auto& q : p.quadratics) expect(q.w.size() == p.n && q.P.rows() == p.n && q.P.cols() == p.n, "quadratic");
  for (const auto& s : p.socs) {
    expect(s.W.cols() == p.n && s.u.size() == s.W.rows() && s.phi.size() == p.n, "soc");
  }
  if (p.lmi) {
    const auto& L = *p.lmi;
    expect(L.r >= 1 && L.R.rows() == L.r && L.R.cols() == L.r, "lmi.R");
    expect(L.basis_flat.rows() == L.r * L.r && L.basis_flat.cols() == p.n, "lmi.basis");
  }
  return p;
}

inline ProjectionPlan load_plan(const std::string& path) {
  return plan_from_json(parse_json(read_text(path), path));
}

inline std::string dump(const json& j) { return j.dump(1) + "\n"; }

// ---- reports ----

inline json compile_report_to_json(const CompileReport& r) {
  return {{"k", r.k},         {"n", r.n},         {"stacked_rows", r.stacked_rows}, {"kept", r.kept},
          {"removed", r.removed}, {"E", r.E}, {"I", r.I},                     {"epsilon", r.epsilon}};
}

inline json verification_to_json(const VerificationReport& r) {
  json dev = json::object();
  const char* names[4] = {"linear", "quadratic", "soc", "lmi"};
  for (std::size_t f = 0; f < 4; ++f) {
    if (r.max_kappa_deviation[f] >= 0.0) dev[names[f]] = r.max_kappa_deviation[f];
  }
  return {{"samples", r.samples},
          {"feasible_fraction", r.feasible_fraction},
          {"worst_violation", r.worst_violation},
          {"max_kappa_deviation", std::move(dev)},
          {"roundtrip_max_error", r.roundtrip_max_error},
          {"hash_match", r.hash_match},
          {"plan_consistent", r.plan_consistent},
          {"notes", r.notes},
          {"passed", r.passed}};
}

// ---- batches ----

inline void append_double(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, res.ptr);
}

/// One row per line, comma separated, shortest round-trip decimal.
inline std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      append_double(out, m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

inline Matrix matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    for (;;) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end && *p == '+') ++p;
      double x = 0.0;
      const auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc{}) detail::malformed("csv: bad number in row " + std::to_string(rows.size() + 1));
      row.push_back(x);
      p = res.ptr;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') detail::malformed("csv: expected ',' in row " + std::to_string(rows.size() + 1));
      ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      detail::malformed("csv: row " + std::to_string(rows.size() + 1) + " has a different length");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

inline constexpr char binary_magic[8] = {'R', 'A', 'Y', 'E', 'N', 'B', 'I', 'N'};
inline constexpr std::uint32_t binary_version = 1;

namespace detail {

template <class T>
void put_le(std::string& out, T x) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) malformed("binary batch: truncated");
  T x = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) x |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return x;
}

}  // namespace detail

/// magic "RAYENBIN", u32 version, u64 rows, u64 cols, then row-major
/// little-endian IEEE doubles.
inline std::string matrix_to_binary(const Matrix& m) {
  std::string out(binary_magic, sizeof binary_magic);
  detail::put_le<std::uint32_t>(out, binary_version);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = 0;
      const double x = m(i, j);
      std::memcpy(&bits, &x, 8);
      detail::put_le<std::uint64_t>(out, bits);
    }
  }
  return out;
}

inline Matrix matrix_from_binary(const std::string& in) {
  if (in.size() < sizeof binary_magic || std::memcmp(in.data(), binary_magic, sizeof binary_magic) != 0) {
    detail::malformed("binary batch: bad magic");
  }
  std::size_t pos = sizeof binary_magic;
  if (detail::get_le<std::uint32_t>(in, pos) != binary_version) detail::malformed("binary batch: unsupported version");
  const auto rows = detail::get_le<std::uint64_t>(in, pos);
  const auto cols = detail::get_le<std::uint64_t>(in, pos);
  if (cols != 0 && rows > (in.size() - pos) / 8 / cols) detail::malformed("binary batch: truncated");
  if (in.size() - pos != rows * cols * 8) detail::malformed("binary batch: size does not match header");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const auto bits = detail::get_le<std::uint64_t>(in, pos);
      double x = 0.0;
      std::memcpy(&x, &bits, 8);
      m(i, j) = x;
    }
  }
  return m;
}

/// Reads CSV or the binary format, chosen by the magic bytes.
inline Matrix load_batch(const std::string& path) {
  const std::string text = read_text(path);
  if (text.size() >= sizeof binary_magic && std::memcmp(text.data(), binary_magic, sizeof binary_magic) == 0) {
    return matrix_from_binary(text);
  }
  return matrix_from_csv(text);
}

}  // namespace rayen::io

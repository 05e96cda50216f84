#pragma once

// Per-iteration solver records and their JSON-lines serialization.

#include "lpcg/functional.hpp"

#include "json.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace lpcg {

struct TraceRecord {
  int iter = 0;
  double F = 0.0;                 // exact F_{l,p} at the iterate
  double residual_norm_l = 0.0;   // ||Ax - b||_l
  double penalty_norm_p = 0.0;    // ||x||_p
  Index nnz = 0;
  std::optional<double> eps;      // IRLS weight smoothing
  std::optional<double> H;        // smoothed objective (CONV CG)
  std::optional<double> sigma;
  std::optional<double> mu;
  std::optional<double> beta;
  std::optional<double> lambda;   // set when the record comes from a continuation run
};

struct SolveTrace {
  std::vector<TraceRecord> records;

  bool empty() const noexcept { return records.empty(); }
  std::size_t size() const noexcept { return records.size(); }
  const TraceRecord& back() const { return records.back(); }
  void push(TraceRecord r) { records.push_back(std::move(r)); }
};

// Fills the fields every solver reports from a residual r = Ax - b.
inline TraceRecord make_record(int iter, const Vector& r, const Vector& x, const Penalty& pen) {
  TraceRecord rec;
  rec.iter = iter;
  const double rl = lp_power_norm(r, pen.l);
  const double xp = lp_power_norm(x, pen.p);
  rec.F = rl + pen.lambda * xp;
  rec.residual_norm_l = pen.l == 1.0 ? rl : std::pow(rl, 1.0 / pen.l);
  rec.penalty_norm_p = pen.p == 1.0 ? xp : std::pow(xp, 1.0 / pen.p);
  rec.nnz = count_nonzeros(x);
  return rec;
}

inline nlohmann::json to_json(const TraceRecord& r) {
  nlohmann::json j;
  j["iter"] = r.iter;
  if (r.lambda) j["lambda"] = *r.lambda;
  j["F"] = r.F;
  j["residual_norm_l"] = r.residual_norm_l;
  j["penalty_norm_p"] = r.penalty_norm_p;
  if (r.eps) j["eps"] = *r.eps;
  if (r.H) j["H"] = *r.H;
  if (r.sigma) j["sigma"] = *r.sigma;
  if (r.mu) j["mu"] = *r.mu;
  if (r.beta) j["beta"] = *r.beta;
  j["nnz"] = r.nnz;
  return j;
}

inline TraceRecord record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.iter = j.at("iter").get<int>();
  r.F = j.at("F").get<double>();
  r.residual_norm_l = j.at("residual_norm_l").get<double>();
  r.penalty_norm_p = j.at("penalty_norm_p").get<double>();
  r.nnz = j.at("nnz").get<Index>();
  auto opt = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  opt("eps", r.eps);
  opt("H", r.H);
  opt("sigma", r.sigma);
  opt("mu", r.mu);
  opt("beta", r.beta);
  opt("lambda", r.lambda);
  return r;
}

// One compact JSON object per line.
inline void write_jsonl(std::ostream& os, const SolveTrace& trace) {
  for (const auto& r : trace.records) os << to_json(r).dump() << '\n';
}

}  // namespace lpcg

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "chem/canon.hpp"
#include "chem/smiles.hpp"
#include "common/error.hpp"
#include "evaluate/evaluate.hpp"

namespace molswap::eval {

namespace {

void require_nonempty(const std::vector<double>& x, const char* what) {
  if (x.empty()) fail(ErrorCode::kEmptySample, std::string(what) + " sample is empty");
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(sorted.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::vector<double> smoothed(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  const double norm = 1.0 + kSmoothing * static_cast<double>(counts.size());
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = (counts[i] / total + kSmoothing) / norm;
  return p;
}

struct ParsedSet {
  std::vector<chem::MolGraph> mols;
  std::vector<std::string> signatures;
};

ParsedSet parse_valid(const std::vector<std::string>& smiles) {
  ParsedSet out;
  for (const auto& s : smiles) {
    try {
      auto g = chem::parse_smiles(s);
      if (!g.is_saturated()) continue;
      out.signatures.push_back(chem::canonical_signature(g).text);
      out.mols.push_back(std::move(g));
    } catch (const Error&) {
    }
  }
  return out;
}

}  // namespace

int Binning::bin_of(double x) const {
  const double k = std::floor((x - lo) / width);
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(bins - 1)));
}

Binning shared_binning(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  if (all.empty()) fail(ErrorCode::kEmptySample, "cannot bin an empty sample");
  std::sort(all.begin(), all.end());
  const double mn = all.front(), mx = all.back();
  Binning bins;
  const bool integral = std::all_of(all.begin(), all.end(), [](double x) { return std::floor(x) == x; });
  if (integral && mx - mn + 1.0 <= kMaxBins) {
    bins.unit = true;
    bins.lo = mn - 0.5;
    bins.width = 1.0;
    bins.bins = static_cast<int>(mx - mn) + 1;
    return bins;
  }
  const double range = mx - mn;
  const double iqr = quantile(all, 0.75) - quantile(all, 0.25);
  const double fd = 2.0 * iqr / std::cbrt(static_cast<double>(all.size()));
  int count = kMinBins;
  if (fd > 0.0 && range > 0.0) count = static_cast<int>(std::clamp(std::ceil(range / fd), double{kMinBins}, double{kMaxBins}));
  bins.bins = count;
  if (range > 0.0) {
    bins.lo = mn;
    bins.width = range / count;
  } else {
    bins.lo = mn - 0.5;
    bins.width = 1.0 / count;
  }
  return bins;
}

std::vector<double> histogram(const std::vector<double>& x, const Binning& bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins.bins), 0.0);
  for (double v : x) counts[static_cast<std::size_t>(bins.bin_of(v))] += 1.0;
  return counts;
}

double kl_divergence(const std::vector<double>& reference, const std::vector<double>& generated) {
  require_nonempty(reference, "reference");
  require_nonempty(generated, "generated");
  const Binning bins = shared_binning(reference, generated);
  const auto p = smoothed(histogram(reference, bins));
  const auto q = smoothed(histogram(generated, bins));
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, kl);
}

double score_from_divergences(const std::vector<double>& kl) {
  if (kl.empty()) fail(ErrorCode::kEmptySample, "no divergences to score");
  double sum = 0.0;
  for (double k : kl) sum += std::exp(-k);
  return 100.0 * sum / static_cast<double>(kl.size());
}

double kl_score(const std::array<std::vector<double>, kDescriptorCount>& reference,
                const std::array<std::vector<double>, kDescriptorCount>& generated) {
  std::vector<double> kl;
  for (int d = 0; d < kDescriptorCount; ++d) {
    kl.push_back(kl_divergence(reference[static_cast<std::size_t>(d)], generated[static_cast<std::size_t>(d)]));
  }
  return score_from_divergences(kl);
}

double js_distance_dist(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) fail(ErrorCode::kDimensionMismatch, "distributions differ in length");
  double sp = 0.0, sq = 0.0;
  for (double x : p) sp += x;
  for (double x : q) sq += x;
  if (!(sp > 0.0) || !(sq > 0.0)) fail(ErrorCode::kEmptySample, "distribution has no mass");
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / sp, qi = q[i] / sq;
    const double m = 0.5 * (pi + qi);
    if (pi > 0.0) a += pi * std::log2(pi / m);
    if (qi > 0.0) b += qi * std::log2(qi / m);
  }
  const double js = std::clamp(0.5 * (a + b), 0.0, 1.0);
  return std::sqrt(js);
}

double js_distance(const std::vector<double>& p, const std::vector<double>& q) {
  require_nonempty(p, "first");
  require_nonempty(q, "second");
  const Binning bins = shared_binning(p, q);
  return js_distance_dist(histogram(p, bins), histogram(q, bins));
}

Vun vun_metrics(const std::vector<std::string>& generated_smiles, const std::set<std::string>& training_signatures) {
  Vun v;
  v.total = generated_smiles.size();
  const ParsedSet parsed = parse_valid(generated_smiles);
  v.valid = parsed.mols.size();
  const std::set<std::string> distinct(parsed.signatures.begin(), parsed.signatures.end());
  v.distinct = distinct.size();
  for (const auto& s : distinct) v.novel += training_signatures.count(s) ? 0 : 1;
  auto pct = [](std::size_t a, std::size_t b) { return b ? 100.0 * static_cast<double>(a) / static_cast<double>(b) : 0.0; };
  v.validity = pct(v.valid, v.total);
  v.uniqueness = pct(v.distinct, v.valid);
  v.novelty = pct(v.novel, v.distinct);
  return v;
}

std::string compare_report(const NamedSet& reference, const NamedSet& generated,
                           const std::set<std::string>& training_signatures, const std::optional<NamedSet>& second,
                           bool plot_data, int workers) {
  using nlohmann::ordered_json;
  const ParsedSet ref = parse_valid(reference.smiles);
  const ParsedSet gen = parse_valid(generated.smiles);
  if (ref.mols.empty()) fail(ErrorCode::kEmptySample, "reference set has no valid molecule");
  if (gen.mols.empty()) fail(ErrorCode::kEmptySample, "generated set has no valid molecule");
  const auto ref_samples = descriptor_samples(ref.mols, workers);
  const auto gen_samples = descriptor_samples(gen.mols, workers);
  const Vun vun = vun_metrics(generated.smiles, training_signatures);

  ordered_json report;
  report["format"] = "molswap-eval-report";
  report["version"] = kReportVersion;
  report["reference"] = {{"name", reference.name}, {"size", reference.smiles.size()}, {"valid", ref.mols.size()}};
  report["generated"] = {{"name", generated.name}, {"size", generated.smiles.size()}, {"valid", gen.mols.size()}};

  std::vector<double> kls, jss;
  ordered_json rows = ordered_json::array();
  ordered_json plots = ordered_json::array();
  for (int d = 0; d < kDescriptorCount; ++d) {
    const auto& r = ref_samples[static_cast<std::size_t>(d)];
    const auto& g = gen_samples[static_cast<std::size_t>(d)];
    const Binning bins = shared_binning(r, g);
    const double kl = kl_divergence(r, g);
    const double js = js_distance(r, g);
    kls.push_back(kl);
    jss.push_back(js);
    ordered_json row;
    row["id"] = kDescriptorIds[static_cast<std::size_t>(d)];
    row["kl"] = kl;
    row["js_distance"] = js;
    row["binning"] = {{"mode", bins.unit ? "unit" : "freedman-diaconis"},
                      {"lo", bins.lo},
                      {"width", bins.width},
                      {"bins", bins.bins}};
    row["samples"] = {{"reference", r.size()}, {"generated", g.size()}};
    rows.push_back(std::move(row));
    if (plot_data) {
      plots.push_back({{"id", kDescriptorIds[static_cast<std::size_t>(d)]},
                       {"lo", bins.lo},
                       {"width", bins.width},
                       {"reference", histogram(r, bins)},
                       {"generated", histogram(g, bins)}});
    }
  }
  report["aggregate"] = {{"kl_score", score_from_divergences(kls)},
                         {"validity", vun.validity},
                         {"uniqueness", vun.uniqueness},
                         {"novelty", vun.novelty}};
  report["descriptors"] = std::move(rows);
  report["unimplemented_descriptors"] = {"mol_logp", "mol_mr", "partial_charges", "bertz_ct", "ipc",
                                         "peoe_vsa", "smr_vsa", "slogp_vsa", "estate_vsa"};

  if (second) {
    const ParsedSet sec = parse_valid(second->smiles);
    if (sec.mols.empty()) fail(ErrorCode::kEmptySample, "second generated set has no valid molecule");
    const auto sec_samples = descriptor_samples(sec.mols, workers);
    ordered_json cmp;
    cmp["name"] = second->name;
    cmp["size"] = second->smiles.size();
    cmp["kl_score"] = kl_score(ref_samples, sec_samples);
    ordered_json crow = ordered_json::array();
    for (int d = 0; d < kDescriptorCount; ++d) {
      const double js2 = js_distance(ref_samples[static_cast<std::size_t>(d)], sec_samples[static_cast<std::size_t>(d)]);
      const double js1 = jss[static_cast<std::size_t>(d)];
      ordered_json ratio = nullptr;
      if (js1 == js2) {
        ratio = 0.0;
      } else if (js1 > 0.0 && js2 > 0.0) {
        ratio = std::log2(js2 / js1);
      }
      crow.push_back({{"id", kDescriptorIds[static_cast<std::size_t>(d)]}, {"js_distance", js2}, {"log2_ratio", ratio}});
    }
    cmp["descriptors"] = std::move(crow);
    report["comparison"] = std::move(cmp);
  }
  if (plot_data) report["plot_data"] = std::move(plots);
  return report.dump(2) + "\n";
}

}  // namespace molswap::eval

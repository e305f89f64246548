#include "softts/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "softts/errors.hpp"
#include "softts/text_io.hpp"

namespace softts {

std::vector<ExperimentResult> read_results(const std::filesystem::path& path, std::size_t* skipped) {
  std::vector<ExperimentResult> out;
  std::size_t bad = 0;
  std::ifstream in(path);
  if (!in) {
    if (skipped) *skipped = 0;
    return out;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ExperimentResult::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      ++bad;
      std::cerr << "warning: " << path.string() << ":" << line_no << ": skipping malformed record\n";
    }
  }
  if (skipped) *skipped = bad;
  return out;
}

AccuracyCube collect_accuracies(const std::vector<ExperimentResult>& records) {
  std::map<std::string, std::map<std::string, std::map<std::string, std::pair<double, int>>>> sums;
  for (const auto& r : records) {
    auto& cell = sums[r.model][r.label][r.dataset];
    cell.first += r.best_accuracy;
    cell.second += 1;
  }
  AccuracyCube cube;
  for (const auto& [model, by_label] : sums)
    for (const auto& [label, by_ds] : by_label)
      for (const auto& [ds, acc] : by_ds) cube.cells[model][label][ds] = acc.first / acc.second;
  return cube;
}

namespace {

std::vector<std::string> ordered_labels(const std::set<std::string>& present, const std::vector<std::string>& order) {
  std::vector<std::string> out;
  for (const auto& l : order) {
    if (present.count(l)) out.push_back(l);
  }
  for (const auto& l : present) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Datasets covered by every label of one model, or a CoverageError listing gaps.
std::vector<std::string> common_datasets(const std::string& model,
                                         const std::map<std::string, std::map<std::string, double>>& by_label) {
  std::set<std::string> all;
  for (const auto& [label, by_ds] : by_label)
    for (const auto& [ds, v] : by_ds) all.insert(ds);
  std::vector<std::string> gaps;
  for (const auto& [label, by_ds] : by_label)
    for (const auto& ds : all)
      if (!by_ds.count(ds)) gaps.push_back(model + "/" + label + "/" + ds);
  if (!gaps.empty()) {
    std::string msg = "missing result cells:";
    for (const auto& g : gaps) msg += " " + g;
    throw CoverageError(msg);
  }
  return {all.begin(), all.end()};
}

}  // namespace

ResultsTable aggregate_table(const std::vector<ExperimentResult>& records, const std::optional<std::string>& model_filter,
                             const std::vector<std::string>& method_order) {
  const auto cube = collect_accuracies(records);
  ResultsTable table;
  std::set<std::string> labels;
  for (const auto& [model, by_label] : cube.cells) {
    if (model_filter && model != *model_filter) continue;
    table.models.push_back(model);
    for (const auto& [label, _] : by_label) labels.insert(label);
  }
  if (table.models.empty()) throw CoverageError("no results" + (model_filter ? " for model " + *model_filter : std::string()));
  table.methods = ordered_labels(labels, method_order);
  table.means = Matrix(table.models.size(), table.methods.size(), std::nan(""));
  for (std::size_t mi = 0; mi < table.models.size(); ++mi) {
    const auto& by_label = cube.cells.at(table.models[mi]);
    const auto datasets = common_datasets(table.models[mi], by_label);
    table.dataset_count.push_back(datasets.size());
    for (std::size_t li = 0; li < table.methods.size(); ++li) {
      auto it = by_label.find(table.methods[li]);
      if (it == by_label.end()) continue;
      double sum = 0.0;
      for (const auto& ds : datasets) sum += it->second.at(ds);
      table.means(mi, li) = sum / double(datasets.size());
    }
  }
  return table;
}

std::vector<double> fractional_ranks(std::span<const double> scores) {
  const std::size_t k = scores.size();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(k);
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j + 1 < k && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Average ranks (1-based, ascending) of values, plus tie group sizes.
std::vector<double> ascending_ranks(std::span<const double> v, std::vector<std::size_t>* ties) {
  std::vector<double> neg(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
  auto r = fractional_ranks(neg);
  if (ties) {
    std::map<double, std::size_t> groups;
    for (double x : v) ++groups[x];
    ties->clear();
    for (const auto& [_, c] : groups) {
      if (c > 1) ties->push_back(c);
    }
  }
  return r;
}

}  // namespace

double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("wilcoxon: samples differ in size");
  const std::size_t n = a.size();
  std::vector<double> d(n), absd(n);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    absd[i] = std::abs(d[i]);
    if (d[i] == 0.0) ++zeros;
  }
  if (zeros == n) return 1.0;
  std::vector<std::size_t> ties;
  const auto ranks = ascending_ranks(absd, &ties);
  double r_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0.0) r_plus += ranks[i];
  }

  if (zeros == 0 && ties.empty() && n <= 50) {
    // Exact null distribution of W+ over ranks 1..n.
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> count(max_sum + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r)
      for (std::size_t s = max_sum; s >= r; --s) count[s] += count[s - r];
    const double total = std::pow(2.0, double(n));
    const auto w = static_cast<std::size_t>(std::llround(r_plus));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      if (s <= w) lower += count[s];
      if (s >= w) upper += count[s];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / total);
  }

  const double nn = double(n), n0 = double(zeros);
  const double mean = nn * (nn + 1) / 4.0 - n0 * (n0 + 1) / 4.0;
  double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - n0 * (n0 + 1) * (2 * n0 + 1) / 24.0;
  for (std::size_t t : ties) var -= (double(t) * t * t - double(t)) / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = (r_plus - mean) / std::sqrt(var);
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

std::pair<double, double> friedman_test(const Matrix& scores) {
  const double n = double(scores.rows), k = double(scores.cols);
  if (scores.rows < 2 || scores.cols < 2) throw DimensionError("friedman: need >= 2 datasets and >= 2 methods");
  std::vector<double> rank_sums(scores.cols, 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < scores.rows; ++i) {
    const auto r = fractional_ranks(scores.row(i));
    for (std::size_t j = 0; j < scores.cols; ++j) rank_sums[j] += r[j];
    std::map<double, std::size_t> groups;
    for (double v : scores.row(i)) ++groups[v];
    for (const auto& [_, t] : groups) tie_term += double(t) * t * t - double(t);
  }
  const double correction = 1.0 - tie_term / (n * k * (k * k - 1.0));
  if (correction <= 1e-12) return {0.0, 1.0};
  double ssbn = 0.0;
  for (double r : rank_sums) ssbn += r * r;
  double chi2 = (12.0 / (n * k * (k + 1.0)) * ssbn - 3.0 * n * (k + 1.0)) / correction;
  chi2 = std::max(0.0, chi2);
  const double p = boost::math::gamma_q((k - 1.0) / 2.0, chi2 / 2.0);
  return {chi2, p};
}

RankReport critical_difference(const std::vector<ExperimentResult>& records, const std::string& model, double alpha,
                               const std::vector<std::string>& method_order) {
  const auto cube = collect_accuracies(records);
  auto it = cube.cells.find(model);
  if (it == cube.cells.end()) throw CoverageError("no results for model " + model);
  const auto& by_label = it->second;

  RankReport rep;
  rep.model = model;
  std::set<std::string> labels;
  for (const auto& [label, _] : by_label) labels.insert(label);
  rep.methods = ordered_labels(labels, method_order);
  rep.datasets = common_datasets(model, by_label);
  if (rep.methods.size() < 2) throw CoverageError("critical difference needs >= 2 methods for " + model);
  if (rep.datasets.size() < 3) {
    throw CoverageError("critical difference needs >= 3 datasets for " + model + ", have " +
                        std::to_string(rep.datasets.size()));
  }

  const std::size_t k = rep.methods.size(), n = rep.datasets.size();
  Matrix scores(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) scores(i, j) = by_label.at(rep.methods[j]).at(rep.datasets[i]);

  rep.ranks = Matrix(n, k);
  rep.average_ranks.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = fractional_ranks(scores.row(i));
    for (std::size_t j = 0; j < k; ++j) {
      rep.ranks(i, j) = r[j];
      rep.average_ranks[j] += r[j] / double(n);
    }
  }
  std::tie(rep.friedman_statistic, rep.friedman_p) = friedman_test(scores);

  // Pairwise Wilcoxon with Holm step-down.
  rep.pairwise_p = Matrix(k, k, 1.0);
  rep.significant.assign(k, std::vector<bool>(k, false));
  std::vector<std::tuple<double, std::size_t, std::size_t>> tests;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      std::vector<double> xa(n), xb(n);
      for (std::size_t i = 0; i < n; ++i) {
        xa[i] = scores(i, a);
        xb[i] = scores(i, b);
      }
      const double p = wilcoxon_signed_rank_p(xa, xb);
      rep.pairwise_p(a, b) = rep.pairwise_p(b, a) = p;
      tests.emplace_back(p, a, b);
    }
  }
  std::stable_sort(tests.begin(), tests.end(), [](const auto& x, const auto& y) { return std::get<0>(x) < std::get<0>(y); });
  if (rep.friedman_p < alpha) {
    const std::size_t m = tests.size();
    for (std::size_t i = 0; i < m; ++i) {
      const auto [p, a, b] = tests[i];
      if (p > alpha / double(m - i)) break;
      rep.significant[a][b] = rep.significant[b][a] = true;
    }
  }

  // Cliques: maximal runs (in rank order) with no significant pair inside.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.average_ranks[a] < rep.average_ranks[b]; });
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i;
    while (j + 1 < k) {
      bool ok = true;
      for (std::size_t t = i; t <= j && ok; ++t) ok = !rep.significant[order[t]][order[j + 1]];
      if (!ok) break;
      ++j;
    }
    if (j > i && (runs.empty() || j > runs.back().second)) runs.emplace_back(i, j);
  }
  for (const auto& [i, j] : runs) {
    std::vector<std::string> clique;
    for (std::size_t t = i; t <= j; ++t) clique.push_back(rep.methods[order[t]]);
    rep.cliques.push_back(std::move(clique));
  }
  return rep;
}

std::vector<ScatterPoint> scatter_points(const std::vector<ExperimentResult>& records, const std::string& model,
                                         const std::string& method_label, const std::string& baseline_label) {
  const auto cube = collect_accuracies(records);
  std::vector<ScatterPoint> pts;
  auto it = cube.cells.find(model);
  if (it == cube.cells.end()) return pts;
  auto base = it->second.find(baseline_label);
  auto meth = it->second.find(method_label);
  if (base == it->second.end() || meth == it->second.end()) return pts;
  for (const auto& [ds, acc] : base->second) {
    auto m = meth->second.find(ds);
    if (m != meth->second.end()) pts.push_back({ds, acc, m->second});
  }
  return pts;
}

void write_table_csv(const ResultsTable& table, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "model";
  for (const auto& m : table.methods) os << ',' << m;
  os << ",datasets\n";
  for (std::size_t i = 0; i < table.models.size(); ++i) {
    os << table.models[i];
    for (std::size_t j = 0; j < table.methods.size(); ++j) {
      os << ',';
      if (!std::isnan(table.means(i, j))) os << fixed4(table.means(i, j));
    }
    os << ',' << table.dataset_count[i] << '\n';
  }
  write_file_atomic(path, os.str());
}

void write_ranks_csv(const std::vector<RankReport>& reports, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "model,method,average_rank,friedman_p,clique\n";
  for (const auto& r : reports) {
    for (std::size_t j = 0; j < r.methods.size(); ++j) {
      std::string cliques;
      for (std::size_t c = 0; c < r.cliques.size(); ++c) {
        if (std::find(r.cliques[c].begin(), r.cliques[c].end(), r.methods[j]) != r.cliques[c].end()) {
          if (!cliques.empty()) cliques += ';';
          cliques += std::to_string(c);
        }
      }
      os << r.model << ',' << r.methods[j] << ',' << fixed4(r.average_ranks[j]) << ',' << fixed4(r.friedman_p) << ','
         << cliques << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

}  // namespace softts

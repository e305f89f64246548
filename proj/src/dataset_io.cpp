#include "softts/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>

#include "softts/errors.hpp"

namespace softts {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(std::string_view tok) {
  return tok == "NaN" || tok == "nan" || tok == "NAN" || tok == "?";
}

std::optional<double> parse_number(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == ',')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != ',') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

LabelMap LabelMap::from_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  bool all_numeric = std::all_of(tokens.begin(), tokens.end(),
                                 [](const std::string& t) { return parse_number(t).has_value(); });
  if (all_numeric) {
    std::stable_sort(tokens.begin(), tokens.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  LabelMap m;
  m.tokens_ = std::move(tokens);
  return m;
}

int LabelMap::index_of(const std::string& token) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), token);
  return it == tokens_.end() ? -1 : static_cast<int>(it - tokens_.begin());
}

std::vector<RawRecord> parse_ucr_stream(std::istream& in, std::string_view source) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": no values after label");
    }
    RawRecord rec;
    rec.label_token = std::string(fields[0]);
    rec.values.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      if (is_missing_token(fields[k])) {
        rec.values.push_back(kMissing);
        continue;
      }
      auto v = parse_number(fields[k]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(std::string(source) + ":" + std::to_string(line_no) +
                         ": non-numeric value '" + std::string(fields[k]) + "'");
      }
      rec.values.push_back(*v);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError(std::string(source) + ": empty file");
  return records;
}

std::vector<RawRecord> parse_ucr_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_ucr_stream(in, path.string());
}

void interpolate_missing(std::vector<double>& values) {
  const std::size_t n = values.size();
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isnan(values[i])) {
      first = i;
      break;
    }
  }
  if (first == n) throw ParseError("series has no observed values");
  for (std::size_t i = 0; i < first; ++i) values[i] = values[first];

  std::size_t prev = first;
  for (std::size_t i = first + 1; i < n; ++i) {
    if (std::isnan(values[i])) continue;
    if (i > prev + 1) {
      const double span = static_cast<double>(i - prev);
      for (std::size_t k = prev + 1; k < i; ++k) {
        const double w = static_cast<double>(k - prev) / span;
        values[k] = (1.0 - w) * values[prev] + w * values[i];
      }
    }
    prev = i;
  }
  for (std::size_t i = prev + 1; i < n; ++i) values[i] = values[prev];
}

void z_normalize(std::span<double> values, double std_floor) {
  if (values.empty()) return;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::max(std::sqrt(var), std_floor);
  for (double& v : values) v = (v - mean) / sd;
}

LabeledDataset preprocess(std::span<const RawRecord> records, std::string name, Split split,
                          bool normalize, const LabelMap* label_map) {
  if (records.empty()) throw DimensionError(name + ": no records");

  LabeledDataset ds;
  ds.name = std::move(name);
  ds.split = split;
  if (label_map) {
    ds.label_map = *label_map;
  } else {
    std::vector<std::string> tokens;
    tokens.reserve(records.size());
    for (const auto& r : records) tokens.push_back(r.label_token);
    ds.label_map = LabelMap::from_tokens(std::move(tokens));
    if (ds.label_map.size() < 2) {
      throw DimensionError(ds.name + ": need at least 2 distinct labels, found " +
                           std::to_string(ds.label_map.size()));
    }
  }

  const std::size_t length = records.front().values.size();
  ds.samples = Matrix(records.size(), length);
  ds.labels.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<double> values = records[i].values;
    interpolate_missing(values);
    if (values.size() != length) {
      throw DimensionError(ds.name + ": record " + std::to_string(i + 1) + " has length " +
                           std::to_string(values.size()) + ", expected " + std::to_string(length) +
                           " (variable-length datasets are not supported)");
    }
    if (normalize) z_normalize(values);
    std::copy(values.begin(), values.end(), ds.samples.row(i).begin());

    const int idx = ds.label_map.index_of(records[i].label_token);
    if (idx < 0) {
      throw DimensionError(ds.name + ": label '" + records[i].label_token + "' in " +
                           std::string(to_string(split)) + " split is absent from the train labels");
    }
    ds.labels.push_back(idx);
  }
  return ds;
}

DatasetPair load_ucr_dataset(const std::filesystem::path& dir, bool normalize) {
  const std::string name = dir.filename().string();
  auto train_records = parse_ucr_file(dir / (name + "_TRAIN.tsv"));
  auto test_records = parse_ucr_file(dir / (name + "_TEST.tsv"));
  DatasetPair pair;
  pair.train = preprocess(train_records, name, Split::train, normalize);
  pair.test = preprocess(test_records, name, Split::test, normalize, &pair.train.label_map);
  if (pair.train.length() != pair.test.length()) {
    throw DimensionError(name + ": train and test series lengths differ");
  }
  return pair;
}

std::vector<std::string> list_fixed_length_datasets(const std::filesystem::path& archive_root) {
  namespace fs = std::filesystem;
  std::vector<std::string> names;
  if (!fs::is_directory(archive_root)) return names;
  for (const auto& entry : fs::directory_iterator(archive_root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    const auto train = entry.path() / (name + "_TRAIN.tsv");
    const auto test = entry.path() / (name + "_TEST.tsv");
    if (!fs::exists(train) || !fs::exists(test)) continue;
    bool fixed = true;
    std::size_t expected = 0;
    for (const auto& file : {train, test}) {
      std::vector<RawRecord> records;
      try {
        records = parse_ucr_file(file);
      } catch (const ParseError&) {
        fixed = false;
        break;
      }
      for (const auto& r : records) {
        if (expected == 0) expected = r.values.size();
        if (r.values.size() != expected || std::isnan(r.values.back())) {
          fixed = false;
          break;
        }
      }
      if (!fixed) break;
    }
    if (fixed) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace softts

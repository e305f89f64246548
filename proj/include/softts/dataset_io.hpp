#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softts/matrix.hpp"

namespace softts {

enum class Split { train, test };

std::string_view to_string(Split s);

/// One line of a UCR file. Missing values are stored as quiet NaN.
struct RawRecord {
  std::string label_token;
  std::vector<double> values;
};

/// Bijection between original label tokens and contiguous class indices.
class LabelMap {
 public:
  LabelMap() = default;
  /// Numeric order when every token parses as a number, lexicographic otherwise.
  static LabelMap from_tokens(std::vector<std::string> tokens);

  int index_of(const std::string& token) const;  // -1 when absent
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const LabelMap&) const = default;

 private:
  std::vector<std::string> tokens_;
};

struct LabeledDataset {
  std::string name;
  Split split = Split::train;
  Matrix samples;  // N x T
  std::vector<int> labels;
  LabelMap label_map;

  std::size_t size() const { return samples.rows; }
  std::size_t length() const { return samples.cols; }
  int num_classes() const { return label_map.size(); }
};

struct DatasetPair {
  LabeledDataset train;
  LabeledDataset test;
};

std::vector<RawRecord> parse_ucr_file(const std::filesystem::path& path);
/// `source` only appears in error messages.
std::vector<RawRecord> parse_ucr_stream(std::istream& in, std::string_view source);

/// Fills missing values in place: linear interpolation inside the series,
/// nearest observed value at the edges. Throws if every value is missing.
void interpolate_missing(std::vector<double>& values);

/// z-normalizes in place with population std floored at `std_floor`.
void z_normalize(std::span<double> values, double std_floor = 1e-8);

/// Builds a dataset from parsed records. When `label_map` is null a new map is
/// built from the records (train split); otherwise it is reused (test split).
LabeledDataset preprocess(std::span<const RawRecord> records, std::string name, Split split,
                          bool normalize, const LabelMap* label_map = nullptr);

/// Loads `<dir>/<name>_TRAIN.tsv` and `<dir>/<name>_TEST.tsv` where name is the
/// directory's basename.
DatasetPair load_ucr_dataset(const std::filesystem::path& dir, bool normalize = true);

/// Dataset directories under `archive_root` whose series all have the same
/// number of observed values (no trailing NaN padding), sorted by name.
std::vector<std::string> list_fixed_length_datasets(const std::filesystem::path& archive_root);

}  // namespace softts

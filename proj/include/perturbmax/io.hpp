#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "perturbmax/learning.hpp"
#include "perturbmax/model.hpp"
#include "perturbmax/oracle.hpp"

namespace perturbmax {

using Json = nlohmann::ordered_json;

// Model files: {"variables": [card...], "unaries": [[...]], "edges": [{"i", "j",
// "table": [[...]]}], "grid": {"height", "width"}, "meta": {...}} with an
// optional "offset". Edge tables may also be given flat, row-major. Domain
// masks are not serializable.
Json model_to_json(const PairwiseModel& model);
PairwiseModel model_from_json(const Json& j);
void save_model(const PairwiseModel& model, const std::filesystem::path& path);
PairwiseModel load_model(const std::filesystem::path& path);

Json summary_to_json(const ExactSummary& summary);
ExactSummary summary_from_json(const Json& j);

Json params_to_json(const LearnedParams& params);
LearnedParams params_from_json(const Json& j);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// CSV with a header row. Fields containing a comma, quote, CR or LF are
/// quoted, with embedded quotes doubled.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(unsigned long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<unsigned long long>(v)); }
  CsvWriter& empty();
  /// Ends the current row; throws ContractError if its width differs from the header.
  void end_row();

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& data() const { return rows_; }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

  static std::string quote(const std::string& field);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> current_;
};

/// Plain-text graymap with maxval 1: "P2", width height, 1, then pixels.
void write_image(const BinaryImage& image, int height, int width, const std::filesystem::path& path);
BinaryImage read_image(const std::filesystem::path& path, int& height, int& width);
BinaryImage parse_image(std::istream& in, int& height, int& width);

void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace perturbmax

#include "perturbmax/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "perturbmax/errors.hpp"

namespace perturbmax {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot read " + path.string());
  return in;
}

template <class T>
T get_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw ContractError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

Json model_to_json(const PairwiseModel& model) {
  require(!model.has_mask(), "models with a domain mask cannot be serialized");
  Json j;
  j["variables"] = std::vector<int>(model.cardinalities().begin(), model.cardinalities().end());
  if (model.offset() != 0.0) j["offset"] = model.offset();
  Json unary = Json::array();
  for (int i = 0; i < model.num_variables(); ++i) {
    const auto u = model.unary(i);
    unary.push_back(std::vector<double>(u.begin(), u.end()));
  }
  j["unaries"] = std::move(unary);
  Json edges = Json::array();
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    Json rows = Json::array();
    for (int a = 0; a < model.cardinality(ed.i); ++a) {
      std::vector<double> row;
      for (int b = 0; b < model.cardinality(ed.j); ++b) row.push_back(model.pair(e, a, b));
      rows.push_back(std::move(row));
    }
    edges.push_back({{"i", ed.i}, {"j", ed.j}, {"table", std::move(rows)}});
  }
  j["edges"] = std::move(edges);
  if (model.grid()) j["grid"] = {{"height", model.grid()->height}, {"width", model.grid()->width}};
  if (!model.meta().empty()) j["meta"] = Json::parse(model.meta());
  return j;
}

PairwiseModel model_from_json(const Json& j) {
  require(j.is_object(), "model JSON must be an object");
  PairwiseModel model(get_field<std::vector<int>>(j, "variables"));
  if (j.contains("offset")) model.set_offset(get_field<double>(j, "offset"));
  if (j.contains("unaries")) {
    const auto unary = get_field<std::vector<std::vector<double>>>(j, "unaries");
    require(unary.size() == static_cast<std::size_t>(model.num_variables()), "unary list length mismatch");
    for (std::size_t i = 0; i < unary.size(); ++i) model.set_unary(static_cast<int>(i), unary[i]);
  }
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      require(e.contains("table") && e["table"].is_array(), "edge needs a table");
      std::vector<double> flat;
      for (const auto& row : e["table"]) {
        if (row.is_array())
          for (const auto& v : row) flat.push_back(v.get<double>());
        else
          flat.push_back(row.get<double>());
      }
      model.add_edge(get_field<int>(e, "i"), get_field<int>(e, "j"), flat);
    }
  }
  if (j.contains("grid")) model.set_grid({get_field<int>(j["grid"], "height"), get_field<int>(j["grid"], "width")});
  if (j.contains("meta")) model.set_meta(j.at("meta").dump());
  return model;
}

void save_model(const PairwiseModel& model, const std::filesystem::path& path) { write_json(model_to_json(model), path); }

PairwiseModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

Json summary_to_json(const ExactSummary& summary) {
  Json j;
  j["log_partition"] = summary.log_partition;
  j["entropy"] = summary.entropy;
  j["marginals"] = summary.marginals;
  if (summary.gibbs_table) j["gibbs_table"] = *summary.gibbs_table;
  return j;
}

ExactSummary summary_from_json(const Json& j) {
  ExactSummary s;
  s.log_partition = get_field<double>(j, "log_partition");
  s.entropy = get_field<double>(j, "entropy");
  s.marginals = get_field<std::vector<std::vector<double>>>(j, "marginals");
  if (j.contains("gibbs_table")) s.gibbs_table = get_field<std::vector<double>>(j, "gibbs_table");
  return s;
}

Json params_to_json(const LearnedParams& params) {
  Json j;
  j["height"] = params.height;
  j["width"] = params.width;
  j["regularizer"] = params.regularizer;
  const auto n = static_cast<std::ptrdiff_t>(params.unary_count());
  j["theta_unary"] = std::vector<double>(params.theta.begin(), params.theta.begin() + n);
  j["theta_pair"] = std::vector<double>(params.theta.begin() + n, params.theta.end());
  Json trace = Json::array();
  for (const auto& r : params.trace)
    trace.push_back({{"iteration", r.iteration}, {"objective", r.objective}, {"step", r.step},
                     {"halvings", r.halvings}, {"accepted", r.accepted}});
  j["trace"] = std::move(trace);
  return j;
}

LearnedParams params_from_json(const Json& j) {
  LearnedParams p;
  p.height = get_field<int>(j, "height");
  p.width = get_field<int>(j, "width");
  require(p.height >= 1 && p.width >= 1, "image dimensions must be positive");
  p.regularizer = j.contains("regularizer") ? get_field<double>(j, "regularizer") : 1.0;
  auto unary = get_field<std::vector<double>>(j, "theta_unary");
  const auto pair = get_field<std::vector<double>>(j, "theta_pair");
  require(unary.size() == p.unary_count(), "theta_unary length mismatch");
  require(pair.size() == image_edges(p.height, p.width).size(), "theta_pair length mismatch");
  p.theta = std::move(unary);
  p.theta.insert(p.theta.end(), pair.begin(), pair.end());
  if (j.contains("trace"))
    for (const auto& r : j.at("trace"))
      p.trace.push_back({get_field<int>(r, "iteration"), get_field<double>(r, "objective"), get_field<double>(r, "step"),
                         get_field<int>(r, "halvings"), get_field<bool>(r, "accepted")});
  return p;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
  require(!header_.empty(), "CSV header is empty");
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  current_.push_back(s);
  return *this;
}
CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(unsigned long long v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::empty() { return cell(std::string()); }

void CsvWriter::end_row() {
  require(current_.size() == header_.size(), "CSV row has " + std::to_string(current_.size()) + " fields, header has " +
                                                 std::to_string(header_.size()));
  rows_.push_back(std::move(current_));
  current_.clear();
}

std::string CsvWriter::quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string CsvWriter::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out += ',';
      out += quote(fields[k]);
    }
    out += "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvWriter::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << str();
}

void write_image(const BinaryImage& image, int height, int width, const std::filesystem::path& path) {
  require(height >= 1 && width >= 1 && image.size() == static_cast<std::size_t>(height * width),
          "image size does not match its dimensions");
  auto out = open_out(path);
  out << "P2\n" << width << ' ' << height << "\n1\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out << (c ? " " : "") << image[static_cast<std::size_t>(r * width + c)];
    out << '\n';
  }
}

BinaryImage parse_image(std::istream& in, int& height, int& width) {
  // Tokens with '#' comments stripped.
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    for (std::string t; ls >> t;) tokens.push_back(t);
  }
  require(tokens.size() >= 4 && tokens[0] == "P2", "image must be a plain P2 graymap");
  auto to_int = [](const std::string& t) {
    int v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    require(res.ec == std::errc() && res.ptr == t.data() + t.size(), "bad number '" + t + "' in image");
    return v;
  };
  width = to_int(tokens[1]);
  height = to_int(tokens[2]);
  const int maxval = to_int(tokens[3]);
  require(width >= 1 && height >= 1 && maxval >= 1, "bad image header");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  require(tokens.size() == 4 + n, "pixel count does not match the header");
  BinaryImage img(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int v = to_int(tokens[4 + k]);
    require(v >= 0 && v <= maxval, "pixel out of range");
    img[k] = 2 * v > maxval ? 1 : 0;
  }
  return img;
}

BinaryImage read_image(const std::filesystem::path& path, int& height, int& width) {
  auto in = open_in(path);
  return parse_image(in, height, width);
}

void write_json(const Json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractError(path.string() + ": " + e.what());
  }
}

}  // namespace perturbmax

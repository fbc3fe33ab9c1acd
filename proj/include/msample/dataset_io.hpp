#ifndef MSAMPLE_DATASET_IO_HPP
#define MSAMPLE_DATASET_IO_HPP

// Identity dataset files.
//
//   CSV:  header `id,v0,v1,...,v{e-1}`, then one row per identity.
//   JSON: array of {"id": <int>, "values": [<e numbers>]}.
//
// The loader picks the format from the file extension (.csv / .json).

#include <msample/core.hpp>

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace msample {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace detail

inline IdentityDataset read_dataset_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "dataset CSV is empty");
  std::size_t columns = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      const std::string expected = columns == 0 ? "id" : "v" + std::to_string(columns - 1);
      require(cell == expected, "dataset CSV header column " + std::to_string(columns) +
                                    " is '" + cell + "', expected '" + expected + "'");
      ++columns;
    }
  }
  require(columns >= 2, "dataset CSV needs an id column and at least one value column");
  IdentityDataset data;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream cells(line);
    std::string cell;
    require(static_cast<bool>(std::getline(cells, cell, ',')), "row " + std::to_string(row));
    data.ids.push_back(std::stoll(cell));
    EmbeddingVector v(static_cast<Eigen::Index>(columns - 1));
    Eigen::Index k = 0;
    while (std::getline(cells, cell, ',')) {
      require(k < v.size(), "dataset CSV row " + std::to_string(row) + " has too many fields");
      v[k++] = std::stod(cell);
    }
    require(k == v.size(), "dataset CSV row " + std::to_string(row) + " has too few fields");
    data.embeddings.push_back(std::move(v));
  }
  data.validate();
  return data;
}

inline void write_dataset_csv(std::ostream& out, const IdentityDataset& data) {
  out << "id";
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",v" << j;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.ids[i];
    for (Eigen::Index j = 0; j < data.dim(); ++j)
      out << ',' << detail::format_double(data.embeddings[i][j]);
    out << '\n';
  }
}

inline nlohmann::json dataset_to_json(const IdentityDataset& data) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& e = data.embeddings[i];
    arr.push_back({{"id", data.ids[i]}, {"values", std::vector<double>(e.data(), e.data() + e.size())}});
  }
  return arr;
}

inline IdentityDataset dataset_from_json(const nlohmann::json& arr) {
  require(arr.is_array(), "dataset JSON must be an array of {id, values}");
  IdentityDataset data;
  for (const auto& rec : arr) {
    require(rec.is_object() && rec.contains("id") && rec.contains("values"),
            "dataset JSON records need 'id' and 'values'");
    data.ids.push_back(rec.at("id").get<IdentityId>());
    const auto values = rec.at("values").get<std::vector<double>>();
    data.embeddings.emplace_back(
        Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  data.validate();
  return data;
}

inline IdentityDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open dataset file " + path.string());
  const auto ext = detail::lowercase_extension(path);
  if (ext == ".csv") return read_dataset_csv(in);
  if (ext == ".json") return dataset_from_json(nlohmann::json::parse(in));
  throw Error("unrecognized dataset extension '" + ext + "' (expected .csv or .json)");
}

inline void save_dataset(const std::filesystem::path& path, const IdentityDataset& data) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write dataset file " + path.string());
  const auto ext = detail::lowercase_extension(path);
  if (ext == ".csv") {
    write_dataset_csv(out, data);
  } else if (ext == ".json") {
    out << dataset_to_json(data).dump() << '\n';
  } else {
    throw Error("unrecognized dataset extension '" + ext + "' (expected .csv or .json)");
  }
}

}  // namespace msample

#endif  // MSAMPLE_DATASET_IO_HPP

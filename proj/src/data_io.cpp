#include "cfair/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace cfair {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Plain comma-separated rows. Fields are trimmed; quoting is not supported.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

CsvTable read_csv(const fs::path& path, bool has_header = true) {
  CsvTable t;
  std::istringstream in(read_file(path));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (first && has_header) {
      t.header = std::move(fields);
    } else {
      t.rows.push_back(std::move(fields));
    }
    first = false;
  }
  return t;
}

double parse_double(const std::string& s, std::size_t row, const std::string& what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("cannot parse " + what + " '" + s + "' as a number", row);
  }
  return v;
}

long long parse_integer(const std::string& s, std::size_t row, const std::string& what) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("cannot parse " + what + " '" + s + "' as an integer", row);
  }
  return v;
}

// "g2" < "g10": digit runs compare numerically.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na(a.data() + i, ie - i), nb(b.data() + j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

std::unordered_map<std::string, std::size_t> index_by_id(const Dataset& data) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    if (!idx.emplace(data.items[i].id, i).second) {
      throw ValidationError("duplicate item id '" + data.items[i].id + "'");
    }
  }
  return idx;
}

Dataset load_csv_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ParseError("CSV dataset '" + dir.string() + "' is not a directory", 0);
  const CsvTable items = read_csv(dir / "items.csv");
  if (items.header.size() < 2 || items.header[0] != "id" || items.header[1] != "label") {
    throw ParseError("items.csv header must start with id,label", 0);
  }
  const bool has_split = items.header.size() > 2 && items.header[2] == "split";
  const std::size_t first_attr = has_split ? 3 : 2;
  if (items.header.size() <= first_attr) throw ParseError("items.csv declares no sensitive attribute", 0);

  Dataset data;
  for (std::size_t c = first_attr; c < items.header.size(); ++c) data.attributes.push_back({items.header[c], {}});
  std::vector<std::vector<std::string>> raw_levels;
  for (std::size_t r = 0; r < items.rows.size(); ++r) {
    const auto& f = items.rows[r];
    if (f.size() != items.header.size()) {
      throw ParseError("items.csv row has " + std::to_string(f.size()) + " fields, expected " +
                           std::to_string(items.header.size()),
                       r + 1);
    }
    Item it;
    it.id = f[0];
    if (it.id.empty()) throw ParseError("empty item id", r + 1);
    if (!f[1].empty()) it.label = static_cast<int>(parse_integer(f[1], r + 1, "label"));
    if (has_split) {
      try {
        it.split = parse_split(f[2]);
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), r + 1);
      }
    }
    raw_levels.emplace_back(f.begin() + static_cast<std::ptrdiff_t>(first_attr), f.end());
    data.items.push_back(std::move(it));
  }
  for (std::size_t a = 0; a < data.attributes.size(); ++a) {
    std::vector<std::string> levels;
    for (const auto& lv : raw_levels) {
      if (lv[a].empty()) throw ParseError("empty level for attribute '" + data.attributes[a].name + "'", 0);
      levels.push_back(lv[a]);
    }
    std::sort(levels.begin(), levels.end(), natural_less);
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    data.attributes[a].levels = levels;
  }
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    for (std::size_t a = 0; a < data.attributes.size(); ++a) {
      const auto& levels = data.attributes[a].levels;
      const auto pos = std::lower_bound(levels.begin(), levels.end(), raw_levels[i][a], natural_less);
      data.items[i].groups.push_back(static_cast<int>(pos - levels.begin()));
    }
  }

  const CsvTable probs = read_csv(dir / "probs.csv");
  if (probs.header.size() < 2 || probs.header[0] != "id") {
    throw ParseError("probs.csv header must be id,p0,...", 0);
  }
  const std::size_t k = probs.header.size() - 1;
  data.num_classes = static_cast<int>(k);
  const auto idx = index_by_id(data);
  Matrix m(data.items.size(), k);
  std::vector<bool> seen(data.items.size(), false);
  for (std::size_t r = 0; r < probs.rows.size(); ++r) {
    const auto& f = probs.rows[r];
    if (f.size() != k + 1) {
      throw ParseError("probs.csv row has " + std::to_string(f.size()) + " fields, expected " +
                           std::to_string(k + 1),
                       r + 1);
    }
    const auto it = idx.find(f[0]);
    if (it == idx.end()) throw ParseError("probs.csv references unknown item '" + f[0] + "'", r + 1);
    if (seen[it->second]) throw ParseError("probs.csv repeats item '" + f[0] + "'", r + 1);
    seen[it->second] = true;
    for (std::size_t c = 0; c < k; ++c) m(it->second, c) = parse_double(f[c + 1], r + 1, "probability");
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ValidationError("item '" + data.items[i].id + "' has no probability row");
  }
  const auto ids = data.item_ids();
  data.probs = ProbabilityMatrix(std::move(m), ids);

  if (fs::exists(dir / "edges.csv")) {
    CsvTable edges = read_csv(dir / "edges.csv", false);
    std::vector<std::pair<std::size_t, std::size_t>> list;
    for (std::size_t r = 0; r < edges.rows.size(); ++r) {
      const auto& f = edges.rows[r];
      if (r == 0 && f.size() == 2 && f[0] == "u" && f[1] == "v") continue;
      if (f.size() != 2) throw ParseError("edges.csv rows must be u,v", r + 1);
      const long long u = parse_integer(f[0], r + 1, "node");
      const long long v = parse_integer(f[1], r + 1, "node");
      if (u < 0 || v < 0) throw ParseError("negative node id", r + 1);
      list.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }
    data.graph = GraphStructure::from_edges(data.items.size(), list);
  }
  data.validate();
  return data;
}

void save_csv_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::string items = "id,label,split";
  for (const auto& a : data.attributes) items += "," + a.name;
  items += "\n";
  for (const auto& it : data.items) {
    items += it.id + "," + (it.label ? std::to_string(*it.label) : "") + "," + std::string(to_string(it.split));
    for (std::size_t a = 0; a < it.groups.size(); ++a) {
      items += "," + data.attributes[a].levels[static_cast<std::size_t>(it.groups[a])];
    }
    items += "\n";
  }
  write_file(dir / "items.csv", items);

  std::string probs = "id";
  for (int c = 0; c < data.num_classes; ++c) probs += ",p" + std::to_string(c);
  probs += "\n";
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    probs += data.items[i].id;
    for (double p : data.probs.row(i)) probs += "," + format_double(p);
    probs += "\n";
  }
  write_file(dir / "probs.csv", probs);

  if (data.graph) {
    std::string edges = "u,v\n";
    for (const auto& [u, v] : data.graph->edges()) edges += std::to_string(u) + "," + std::to_string(v) + "\n";
    write_file(dir / "edges.csv", edges);
  } else if (fs::exists(dir / "edges.csv")) {
    fs::remove(dir / "edges.csv");
  }
}

template <class J>
const J& require(const J& obj, const char* key, std::size_t row) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(std::string("missing field '") + key + "'", row);
  }
  return obj.at(key);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string_view to_string(DataFormat f) { return f == DataFormat::Csv ? "csv" : "json"; }

DataFormat parse_data_format(std::string_view s) {
  if (s == "csv") return DataFormat::Csv;
  if (s == "json") return DataFormat::Json;
  throw ValidationError("unknown format '" + std::string(s) + "' (expected csv or json)");
}

DataFormat guess_data_format(const fs::path& path) {
  return path.extension() == ".json" ? DataFormat::Json : DataFormat::Csv;
}

Dataset parse_dataset_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 0);
  }
  try {
    Dataset data;
    data.num_classes = require(doc, "num_classes", 0).get<int>();
    if (data.num_classes <= 0) throw ValidationError("num_classes must be positive");
    for (const auto& a : require(doc, "attributes", 0)) {
      Attribute at;
      at.name = require(a, "name", 0).get<std::string>();
      at.levels = require(a, "levels", 0).get<std::vector<std::string>>();
      data.attributes.push_back(std::move(at));
    }
    const auto& items = require(doc, "items", 0);
    const auto k = static_cast<std::size_t>(data.num_classes);
    Matrix m(items.size(), k);
    std::size_t r = 0;
    for (const auto& j : items) {
      ++r;
      Item it;
      it.id = require(j, "id", r).get<std::string>();
      const auto& label = require(j, "label", r);
      if (!label.is_null()) it.label = label.get<int>();
      if (j.contains("split") && !j.at("split").is_null()) it.split = parse_split(j.at("split").get<std::string>());
      const auto& groups = require(j, "groups", r);
      for (const auto& a : data.attributes) {
        if (!groups.contains(a.name)) throw ParseError("item lacks attribute '" + a.name + "'", r);
        const auto level = groups.at(a.name).get<std::string>();
        const auto pos = std::find(a.levels.begin(), a.levels.end(), level);
        if (pos == a.levels.end()) {
          throw ParseError("unknown level '" + level + "' of attribute '" + a.name + "'", r);
        }
        it.groups.push_back(static_cast<int>(pos - a.levels.begin()));
      }
      const auto probs = require(j, "probs", r).get<std::vector<double>>();
      if (probs.size() != k) {
        throw ParseError("item has " + std::to_string(probs.size()) + " probabilities, expected " +
                             std::to_string(k),
                         r);
      }
      for (std::size_t c = 0; c < k; ++c) m(r - 1, c) = probs[c];
      data.items.push_back(std::move(it));
    }
    index_by_id(data);
    const auto ids = data.item_ids();
    data.probs = ProbabilityMatrix(std::move(m), ids);
    if (doc.contains("edges")) {
      std::vector<std::pair<std::size_t, std::size_t>> list;
      for (const auto& e : doc.at("edges")) list.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
      data.graph = GraphStructure::from_edges(data.items.size(), list);
    }
    data.validate();
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid dataset JSON: ") + e.what(), 0);
  }
}

std::string dataset_to_json(const Dataset& data) {
  ordered_json doc;
  doc["num_classes"] = data.num_classes;
  doc["attributes"] = ordered_json::array();
  for (const auto& a : data.attributes) doc["attributes"].push_back({{"name", a.name}, {"levels", a.levels}});
  doc["items"] = ordered_json::array();
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto& it = data.items[i];
    ordered_json j;
    j["id"] = it.id;
    j["label"] = it.label ? ordered_json(*it.label) : ordered_json(nullptr);
    j["split"] = it.split == Split::Unassigned ? ordered_json(nullptr) : ordered_json(std::string(to_string(it.split)));
    ordered_json groups = ordered_json::object();
    for (std::size_t a = 0; a < it.groups.size(); ++a) {
      groups[data.attributes[a].name] = data.attributes[a].levels[static_cast<std::size_t>(it.groups[a])];
    }
    j["groups"] = groups;
    j["probs"] = std::vector<double>(data.probs.row(i).begin(), data.probs.row(i).end());
    doc["items"].push_back(std::move(j));
  }
  if (data.graph) {
    doc["edges"] = ordered_json::array();
    for (const auto& [u, v] : data.graph->edges()) doc["edges"].push_back({u, v});
  }
  return doc.dump(1) + "\n";
}

Dataset load_dataset(const fs::path& path, DataFormat format) {
  if (format == DataFormat::Csv) return load_csv_dataset(path);
  return parse_dataset_json(read_file(path));
}

Dataset load_dataset(const fs::path& path) { return load_dataset(path, guess_data_format(path)); }

void save_dataset(const Dataset& data, const fs::path& path, DataFormat format) {
  if (format == DataFormat::Csv) {
    save_csv_dataset(data, path);
  } else {
    write_file(path, dataset_to_json(data));
  }
}

ScoreTable load_scores(const fs::path& path, const Dataset& data) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "id") throw ParseError("score CSV header must be id,s0,...", 0);
  const std::size_t k = t.header.size() - 1;
  if (k != static_cast<std::size_t>(data.num_classes)) {
    throw ValidationError("score table has " + std::to_string(k) + " classes, dataset has " +
                          std::to_string(data.num_classes));
  }
  const auto idx = index_by_id(data);
  Matrix m(data.items.size(), k);
  std::vector<bool> seen(data.items.size(), false);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    if (f.size() != k + 1) throw ParseError("score row has the wrong number of fields", r + 1);
    const auto it = idx.find(f[0]);
    if (it == idx.end()) throw ParseError("scores reference unknown item '" + f[0] + "'", r + 1);
    if (seen[it->second]) throw ParseError("scores repeat item '" + f[0] + "'", r + 1);
    seen[it->second] = true;
    for (std::size_t c = 0; c < k; ++c) m(it->second, c) = parse_double(f[c + 1], r + 1, "score");
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ValidationError("item '" + data.items[i].id + "' has no score row");
  }
  return ScoreTable(std::move(m));
}

void save_scores(const ScoreTable& table, const Dataset& data, const fs::path& path) {
  std::string out = "id";
  for (std::size_t c = 0; c < table.num_classes(); ++c) out += ",s" + std::to_string(c);
  out += "\n";
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out += data.items.at(i).id;
    for (double s : table.row(i)) out += "," + format_double(s);
    out += "\n";
  }
  write_file(path, out);
}

PredictionSets load_prediction_sets(const fs::path& path, const Dataset& data) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 2 || t.header[0] != "item_id" || t.header[1] != "labels") {
    throw ParseError("prediction-set CSV header must be item_id,labels", 0);
  }
  const auto idx = index_by_id(data);
  PredictionSets sets;
  sets.num_classes = data.num_classes;
  sets.sets.resize(data.items.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    if (f.size() != 1 && f.size() != 2) {
      throw ParseError("prediction-set row must be item_id,labels", r + 1);
    }
    const auto it = idx.find(f[0]);
    if (it == idx.end()) throw ParseError("prediction sets reference unknown item '" + f[0] + "'", r + 1);
    if (sets.sets[it->second]) throw ParseError("prediction sets repeat item '" + f[0] + "'", r + 1);
    std::vector<int> labels;
    if (f.size() == 2 && !f[1].empty()) {
      for (const auto& s : split_fields(f[1], ';')) labels.push_back(static_cast<int>(parse_integer(s, r + 1, "label")));
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
      throw ParseError("prediction set repeats a label", r + 1);
    }
    sets.sets[it->second] = std::move(labels);
  }
  sets.validate();
  return sets;
}

void save_prediction_sets(const PredictionSets& sets, const Dataset& data, const fs::path& path) {
  std::string out = "item_id,labels\n";
  for (std::size_t i = 0; i < sets.sets.size(); ++i) {
    if (!sets.sets[i]) continue;
    out += data.items.at(i).id + ",";
    for (std::size_t j = 0; j < sets.sets[i]->size(); ++j) {
      if (j) out += ";";
      out += std::to_string((*sets.sets[i])[j]);
    }
    out += "\n";
  }
  write_file(path, out);
}

}  // namespace cfair

#include "fairlens/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace fairlens {

using json = nlohmann::json;

int SensitiveAttributeSpec::privileged_code() const {
  auto it = std::find(values.begin(), values.end(), privileged);
  if (it == values.end()) {
    throw ConfigError("attribute '" + name + "': privileged value '" +
                      privileged + "' is not in its value list");
  }
  return static_cast<int>(it - values.begin());
}

void SensitiveAttributeSpec::validate() const {
  if (values.size() < 2) {
    throw ConfigError("attribute '" + name + "' needs at least 2 values");
  }
  std::set<std::string> uniq(values.begin(), values.end());
  if (uniq.size() != values.size()) {
    throw ConfigError("attribute '" + name + "' has duplicate values");
  }
  privileged_code();  // throws if absent
}

void DatasetManifest::validate() const {
  if (sensitive.empty()) {
    throw ConfigError("manifest declares no sensitive attributes");
  }
  std::set<std::string> seen;
  for (const auto& f : feature_columns) {
    if (!seen.insert(f.name).second) {
      throw ConfigError("duplicate feature column '" + f.name + "'");
    }
  }
  for (const auto& s : sensitive) {
    s.validate();
    const std::string& col = s.column.empty() ? s.name : s.column;
    if (seen.count(col)) {
      throw ConfigError("column '" + col + "' is both feature and sensitive");
    }
  }
  if (label_column.empty()) throw ConfigError("manifest lacks label_column");
  if (seen.count(label_column)) {
    throw ConfigError("label column '" + label_column + "' is also a feature");
  }
}

namespace {

ColumnType parse_column_type(const std::string& s) {
  if (s == "numeric") return ColumnType::Numeric;
  if (s == "categorical") return ColumnType::Categorical;
  if (s == "auto" || s.empty()) return ColumnType::Auto;
  throw ConfigError("unknown column type '" + s + "'");
}

SensitiveAttributeSpec attribute_from_json(const json& j) {
  SensitiveAttributeSpec spec;
  spec.name = j.at("name").get<std::string>();
  if (j.contains("values")) {
    spec.values = j.at("values").get<std::vector<std::string>>();
  }
  spec.privileged = j.at("privileged").get<std::string>();
  spec.column = j.value("column", spec.name);
  return spec;
}

}  // namespace

DatasetManifest DatasetManifest::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.csv_path = j.at("csv_path").get<std::string>();
    for (const auto& f : j.at("feature_columns")) {
      if (f.is_string()) {
        m.feature_columns.push_back({f.get<std::string>(), ColumnType::Auto});
      } else {
        m.feature_columns.push_back(
            {f.at("name").get<std::string>(),
             parse_column_type(f.value("type", "auto"))});
      }
    }
    for (const auto& s : j.at("sensitive")) {
      m.sensitive.push_back(attribute_from_json(s));
    }
    m.label_column = j.at("label_column").get<std::string>();
    m.positive_label = j.at("positive_label").get<std::string>();
    if (j.contains("stratum_column")) {
      m.stratum_column = j.at("stratum_column").get<std::string>();
    }
    if (j.contains("expected_counts")) {
      const auto& e = j.at("expected_counts");
      ExpectedCounts counts;
      if (e.contains("n")) counts.n = e.at("n").get<long>();
      if (e.contains("n_prep_features")) {
        counts.n_prep_features = e.at("n_prep_features").get<long>();
      }
      if (e.contains("attributes")) {
        for (const auto& [name, a] : e.at("attributes").items()) {
          AttributeExpectation ax;
          if (a.contains("n_values")) ax.n_values = a.at("n_values").get<long>();
          if (a.contains("privileged_count")) {
            ax.privileged_count = a.at("privileged_count").get<long>();
          }
          counts.attributes[name] = ax;
        }
      }
      m.expected_counts = counts;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest field error: ") + e.what());
  }
  return m;
}

DatasetManifest DatasetManifest::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  DatasetManifest m = from_json_text(buf.str());
  // Resolve a relative csv_path against the manifest's directory.
  if (!m.csv_path.empty() && m.csv_path.front() != '/') {
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) {
      m.csv_path = path.substr(0, slash + 1) + m.csv_path;
    }
  }
  return m;
}

std::uint64_t Dataset::fingerprint() const {
  Fnv1a h;
  h.add(static_cast<std::uint64_t>(n()));
  h.add(static_cast<std::uint64_t>(n_features()));
  h.add(static_cast<std::uint64_t>(n_attributes()));
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) h.add(features(i, j));
  }
  for (Index i = 0; i < sensitive.rows(); ++i) {
    for (Index j = 0; j < sensitive.cols(); ++j) {
      h.add(static_cast<std::uint64_t>(sensitive(i, j)));
    }
  }
  for (Index i = 0; i < labels.size(); ++i) {
    h.add(static_cast<std::uint64_t>(labels[i]));
  }
  for (const auto& a : attributes) {
    h.add(a.name);
    for (const auto& v : a.values) h.add(v);
    h.add(a.privileged);
  }
  return h.value();
}

PredictionSet PredictionSet::from_scores(Vector scores, std::string source,
                                         std::uint64_t seed) {
  PredictionSet p;
  p.hard = IntVector(scores.size());
  for (Index i = 0; i < scores.size(); ++i) {
    p.hard[i] = scores[i] >= kThreshold ? 1 : 0;
  }
  p.scores = std::move(scores);
  p.source = std::move(source);
  p.seed = seed;
  return p;
}

void PredictionSet::validate(Index n) const {
  if (hard.size() != n) {
    throw ValidationError("prediction set has " + std::to_string(hard.size()) +
                          " rows, dataset has " + std::to_string(n));
  }
  for (Index i = 0; i < n; ++i) {
    if (hard[i] != 0 && hard[i] != 1) {
      throw ValidationError("prediction at row " + std::to_string(i) +
                            " is not binary");
    }
  }
  if (scores) {
    if (scores->size() != n) {
      throw ValidationError("score vector length mismatch");
    }
    for (Index i = 0; i < n; ++i) {
      double s = (*scores)[i];
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ValidationError("score at row " + std::to_string(i) +
                              " outside [0,1]");
      }
      if ((s >= kThreshold) != (hard[i] == 1)) {
        throw ValidationError("hard/score inconsistency at row " +
                              std::to_string(i));
      }
    }
  }
}

std::vector<int> GroupPartition::complement(int j) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_rows) - groups[j].size());
  for (int k = 0; k < n_groups(); ++k) {
    if (k == j) continue;
    out.insert(out.end(), groups[k].begin(), groups[k].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// CSV reading

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// RFC-4180 records: quoted fields may contain commas, quotes ("" escape)
// and newlines. Unquoted fields are trimmed so files with padding after
// commas (common in census exports) parse cleanly.
std::vector<std::string> parse_record(std::istream& in, bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  ok = any;
  if (!any) return fields;
  fields.push_back(trim(field));
  return fields;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV '" + path + "'");
  CsvTable t;
  bool ok = false;
  t.header = parse_record(in, ok);
  if (!ok || t.header.empty()) {
    throw ConfigError("CSV '" + path + "' lacks a header row");
  }
  while (true) {
    bool got = false;
    auto rec = parse_record(in, got);
    if (!got) break;
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != t.header.size()) {
      throw ValidationError("CSV '" + path + "', row " +
                            std::to_string(t.rows.size() + 1) + ": expected " +
                            std::to_string(t.header.size()) + " fields, got " +
                            std::to_string(rec.size()));
    }
    t.rows.push_back(std::move(rec));
  }
  return t;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

}  // namespace

// ---------------------------------------------------------------------------
// Preprocessing

PreprocessResult preprocess(const std::vector<RawColumn>& columns) {
  PreprocessResult out;
  std::size_t n = columns.empty() ? 0 : columns[0].cells.size();
  struct Prepared {
    std::string name;
    std::string source;
    std::vector<double> values;
  };
  std::vector<Prepared> prepared;

  for (const auto& col : columns) {
    if (col.cells.size() != n) {
      throw ConfigError("column '" + col.name + "' has inconsistent length");
    }
    bool numeric;
    std::vector<double> parsed(n);
    if (col.type == ColumnType::Numeric) {
      numeric = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!parse_double(col.cells[i], parsed[i])) {
          throw ValidationError("column '" + col.name + "', row " +
                                std::to_string(i) + ": not numeric");
        }
      }
    } else if (col.type == ColumnType::Categorical) {
      numeric = false;
    } else {
      numeric = true;
      for (std::size_t i = 0; i < n && numeric; ++i) {
        numeric = parse_double(col.cells[i], parsed[i]);
      }
    }

    if (numeric) {
      double lo = parsed.empty() ? 0.0 : parsed[0];
      double hi = lo;
      for (double v : parsed) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      Prepared p{col.name, col.name, {}};
      p.values.resize(n);
      if (hi == lo) {
        std::fill(p.values.begin(), p.values.end(), 0.0);
        out.flags.push_back("constant numeric column '" + col.name +
                            "' scaled to 0");
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          p.values[i] = (parsed[i] - lo) / (hi - lo);
        }
      }
      prepared.push_back(std::move(p));
    } else {
      // Full one-hot encoding, categories in lexicographic order.
      std::set<std::string> cats(col.cells.begin(), col.cells.end());
      for (const auto& cat : cats) {
        Prepared p{col.name + "=" + cat, col.name, {}};
        p.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          p.values[i] = col.cells[i] == cat ? 1.0 : 0.0;
        }
        prepared.push_back(std::move(p));
      }
    }
  }

  out.features.resize(static_cast<Index>(n), static_cast<Index>(prepared.size()));
  for (std::size_t c = 0; c < prepared.size(); ++c) {
    out.names.push_back(prepared[c].name);
    out.source.push_back(prepared[c].source);
    for (std::size_t i = 0; i < n; ++i) {
      out.features(static_cast<Index>(i), static_cast<Index>(c)) =
          prepared[c].values[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

Dataset ingest(const DatasetManifest& manifest) {
  manifest.validate();
  CsvTable csv = read_csv(manifest.csv_path);

  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    col_index[csv.header[i]] = i;
  }
  auto require_column = [&](const std::string& name) -> std::size_t {
    auto it = col_index.find(name);
    if (it == col_index.end()) {
      throw ValidationError("CSV is missing column '" + name + "'");
    }
    return it->second;
  };

  std::vector<std::size_t> feature_idx;
  for (const auto& f : manifest.feature_columns) {
    feature_idx.push_back(require_column(f.name));
  }
  std::vector<std::size_t> sensitive_idx;
  for (const auto& s : manifest.sensitive) {
    sensitive_idx.push_back(
        require_column(s.column.empty() ? s.name : s.column));
  }
  std::size_t label_idx = require_column(manifest.label_column);
  std::optional<std::size_t> stratum_idx;
  if (manifest.stratum_column) stratum_idx = require_column(*manifest.stratum_column);

  // Row rejection: any missing cell among used columns drops the row.
  std::vector<std::size_t> used = feature_idx;
  used.insert(used.end(), sensitive_idx.begin(), sensitive_idx.end());
  used.push_back(label_idx);
  if (stratum_idx) used.push_back(*stratum_idx);

  std::vector<const std::vector<std::string>*> kept;
  long rejected = 0;
  for (const auto& row : csv.rows) {
    bool missing = false;
    for (std::size_t c : used) {
      if (is_missing(row[c])) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++rejected;
    } else {
      kept.push_back(&row);
    }
  }
  if (kept.empty()) {
    throw ValidationError("no rows after ingesting '" + manifest.csv_path +
                          "'");
  }

  Dataset ds;
  if (rejected > 0) {
    ds.flags.push_back(std::to_string(rejected) +
                       " rows rejected for missing values");
  }
  const Index n = static_cast<Index>(kept.size());

  // Labels.
  std::set<std::string> label_values;
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const std::string& cell = (*kept[i])[label_idx];
    label_values.insert(cell);
    ds.labels[i] = cell == manifest.positive_label ? 1 : 0;
  }
  if (label_values.size() > 2) {
    throw ValidationError("label column '" + manifest.label_column + "' has " +
                          std::to_string(label_values.size()) +
                          " distinct values; labels must be binary");
  }
  if (!label_values.count(manifest.positive_label)) {
    throw ValidationError("positive label '" + manifest.positive_label +
                          "' never occurs");
  }

  // Sensitive attributes: declared value lists, or observed values in
  // lexicographic order when the manifest omits them.
  ds.attributes = manifest.sensitive;
  ds.sensitive.resize(n, static_cast<Index>(ds.attributes.size()));
  for (std::size_t a = 0; a < ds.attributes.size(); ++a) {
    auto& spec = ds.attributes[a];
    if (spec.values.empty()) {
      std::set<std::string> observed;
      for (Index i = 0; i < n; ++i) observed.insert((*kept[i])[sensitive_idx[a]]);
      spec.values.assign(observed.begin(), observed.end());
      spec.validate();
    }
    std::unordered_map<std::string, int> code;
    for (int v = 0; v < spec.n_values(); ++v) code[spec.values[v]] = v;
    for (Index i = 0; i < n; ++i) {
      const std::string& cell = (*kept[i])[sensitive_idx[a]];
      auto it = code.find(cell);
      if (it == code.end()) {
        throw ValidationError("attribute '" + spec.name +
                              "': unknown category code '" + cell + "'");
      }
      ds.sensitive(i, static_cast<Index>(a)) = it->second;
    }
  }

  // Stratum column, if declared (kept as raw codes, not a feature).
  if (stratum_idx) {
    std::set<std::string> vals;
    for (Index i = 0; i < n; ++i) vals.insert((*kept[i])[*stratum_idx]);
    ds.stratum_values.assign(vals.begin(), vals.end());
    std::unordered_map<std::string, int> code;
    for (std::size_t v = 0; v < ds.stratum_values.size(); ++v) {
      code[ds.stratum_values[v]] = static_cast<int>(v);
    }
    ds.stratum.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      ds.stratum[static_cast<std::size_t>(i)] = code[(*kept[i])[*stratum_idx]];
    }
  }

  // Features.
  std::vector<RawColumn> raw;
  for (std::size_t f = 0; f < manifest.feature_columns.size(); ++f) {
    RawColumn col;
    col.name = manifest.feature_columns[f].name;
    col.type = manifest.feature_columns[f].type;
    col.cells.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) col.cells.push_back((*kept[i])[feature_idx[f]]);
    raw.push_back(std::move(col));
  }
  PreprocessResult prep = preprocess(raw);
  ds.features = std::move(prep.features);
  if (ds.features.rows() != n) ds.features = Matrix(n, 0);  // no feature cols
  ds.feature_names = std::move(prep.names);
  ds.feature_source = std::move(prep.source);
  for (auto& f : prep.flags) ds.flags.push_back(std::move(f));

  // Validation against declared counts.
  if (manifest.expected_counts) {
    const auto& e = *manifest.expected_counts;
    std::ostringstream diff;
    if (e.n && *e.n != static_cast<long>(n)) {
      diff << "n: expected " << *e.n << ", got " << n << "; ";
    }
    // Prepared-feature counts follow the survey convention: sensitive
    // attributes count among the features, one column each.
    long prep = static_cast<long>(ds.n_features()) + ds.n_attributes();
    if (e.n_prep_features && *e.n_prep_features != prep) {
      diff << "n_prep_features: expected " << *e.n_prep_features << ", got "
           << prep << " (" << ds.n_features() << " prepared + "
           << ds.n_attributes() << " sensitive); ";
    }
    for (const auto& [name, ax] : e.attributes) {
      const SensitiveAttributeSpec* spec = nullptr;
      Index col = 0;
      for (std::size_t a = 0; a < ds.attributes.size(); ++a) {
        if (ds.attributes[a].name == name) {
          spec = &ds.attributes[a];
          col = static_cast<Index>(a);
        }
      }
      if (!spec) {
        diff << "attribute '" << name << "' not in manifest; ";
        continue;
      }
      if (ax.n_values && *ax.n_values != spec->n_values()) {
        diff << name << ".n_values: expected " << *ax.n_values << ", got "
             << spec->n_values() << "; ";
      }
      if (ax.privileged_count) {
        long count = 0;
        int priv = spec->privileged_code();
        for (Index i = 0; i < n; ++i) {
          if (ds.sensitive(i, col) == priv) ++count;
        }
        if (count != *ax.privileged_count) {
          diff << name << ".privileged_count: expected " << *ax.privileged_count
               << ", got " << count << "; ";
        }
      }
    }
    std::string d = diff.str();
    if (!d.empty()) {
      throw ValidationError("expected_counts mismatch: " + d);
    }
  }
  return ds;
}

PredictionSet load_predictions(const std::string& path, Index n) {
  CsvTable csv = read_csv(path);
  std::size_t id_col = std::string::npos, hard_col = std::string::npos,
              score_col = std::string::npos;
  for (std::size_t i = 0; i < csv.header.size(); ++i) {
    if (csv.header[i] == "row_id") id_col = i;
    if (csv.header[i] == "hard") hard_col = i;
    if (csv.header[i] == "score") score_col = i;
  }
  if (id_col == std::string::npos || hard_col == std::string::npos) {
    throw ConfigError("prediction file '" + path +
                      "' needs columns row_id and hard");
  }
  PredictionSet p;
  p.source = "file:" + path;
  p.hard = IntVector::Constant(n, -1);
  Vector scores;
  if (score_col != std::string::npos) scores = Vector::Zero(n);
  for (const auto& row : csv.rows) {
    double idv, hardv;
    if (!parse_double(row[id_col], idv) || !parse_double(row[hard_col], hardv)) {
      throw ValidationError("prediction file: non-numeric row_id or hard");
    }
    long id = static_cast<long>(idv);
    if (id < 0 || id >= n) {
      throw ValidationError("prediction file: row_id " + std::to_string(id) +
                            " outside dataset rows 0.." + std::to_string(n - 1));
    }
    if (p.hard[id] != -1) {
      throw ValidationError("prediction file: duplicate row_id " +
                            std::to_string(id));
    }
    p.hard[id] = hardv != 0.0 ? 1 : 0;
    if (score_col != std::string::npos) {
      double s;
      if (!parse_double(row[score_col], s)) {
        throw ValidationError("prediction file: non-numeric score");
      }
      scores[id] = s;
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (p.hard[i] == -1) {
      throw ValidationError("prediction file does not cover row " +
                            std::to_string(i));
    }
  }
  if (score_col != std::string::npos) p.scores = std::move(scores);
  p.validate(n);
  return p;
}

// ---------------------------------------------------------------------------

GroupPartition partition(const Dataset& dataset, int attribute) {
  if (attribute < 0 || attribute >= dataset.n_attributes()) {
    throw MetricError("attribute index " + std::to_string(attribute) +
                      " out of range");
  }
  const auto& spec = dataset.attributes[static_cast<std::size_t>(attribute)];
  GroupPartition part;
  part.attribute = attribute;
  part.privileged = spec.privileged_code();
  part.n_rows = dataset.n();
  part.groups.assign(static_cast<std::size_t>(spec.n_values()), {});
  for (Index i = 0; i < dataset.n(); ++i) {
    int code = dataset.sensitive(i, attribute);
    part.groups[static_cast<std::size_t>(code)].push_back(static_cast<int>(i));
  }
  for (int j = 0; j < part.n_groups(); ++j) {
    if (part.groups[static_cast<std::size_t>(j)].empty()) {
      part.empty_groups.push_back(j);
    }
  }
  return part;
}

SuperAttribute degenerate_super_attribute(const Dataset& dataset,
                                          const std::vector<int>& attrs,
                                          long cap) {
  if (attrs.size() < 2) {
    throw MetricError("super attribute needs at least 2 attribute indices");
  }
  long product = 1;
  for (int a : attrs) {
    if (a < 0 || a >= dataset.n_attributes()) {
      throw MetricError("attribute index out of range");
    }
    int nv = dataset.attributes[static_cast<std::size_t>(a)].n_values();
    if (product > cap / nv) {
      throw MetricError("super attribute would have more than " +
                        std::to_string(cap) + " values");
    }
    product *= nv;
  }

  SuperAttribute out;
  auto& spec = out.spec;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const auto& a = dataset.attributes[static_cast<std::size_t>(attrs[i])];
    spec.name += (i ? "x" : "") + a.name;
  }
  spec.column = spec.name;

  // Value tuples in lexicographic order over the input value lists; the code
  // of a tuple is its mixed-radix index, so recoding needs no lookup table.
  std::vector<std::string> parts(attrs.size());
  std::vector<int> radix(attrs.size());
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    radix[i] = dataset.attributes[static_cast<std::size_t>(attrs[i])].n_values();
  }
  for (long code = 0; code < product; ++code) {
    long rest = code;
    for (std::size_t i = attrs.size(); i-- > 0;) {
      int v = static_cast<int>(rest % radix[i]);
      rest /= radix[i];
      parts[i] = dataset.attributes[static_cast<std::size_t>(attrs[i])]
                     .values[static_cast<std::size_t>(v)];
    }
    std::string label = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) label += "x" + parts[i];
    spec.values.push_back(label);
  }

  long priv_code = 0;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const auto& a = dataset.attributes[static_cast<std::size_t>(attrs[i])];
    priv_code = priv_code * radix[i] + a.privileged_code();
  }
  spec.privileged = spec.values[static_cast<std::size_t>(priv_code)];

  out.codes.resize(dataset.n());
  for (Index r = 0; r < dataset.n(); ++r) {
    long code = 0;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      code = code * radix[i] + dataset.sensitive(r, attrs[i]);
    }
    out.codes[r] = static_cast<int>(code);
  }
  return out;
}

Dataset with_super_attribute(const Dataset& dataset, const SuperAttribute& s) {
  Dataset out = dataset;
  out.attributes.push_back(s.spec);
  out.sensitive.conservativeResize(Eigen::NoChange, dataset.sensitive.cols() + 1);
  out.sensitive.col(out.sensitive.cols() - 1) = s.codes;
  return out;
}

PerturbResult perturb(const Dataset& dataset, std::uint64_t seed,
                      PerturbPolicy policy) {
  const Index n = dataset.n();
  const int na = dataset.n_attributes();
  PerturbResult out;
  out.sensitive = dataset.sensitive;

  // Observed value pools per attribute; an attribute with a single observed
  // value cannot be perturbed and is flagged instead.
  std::vector<std::vector<int>> pool(static_cast<std::size_t>(na));
  for (int a = 0; a < na; ++a) {
    std::set<int> observed;
    for (Index i = 0; i < n; ++i) observed.insert(dataset.sensitive(i, a));
    pool[static_cast<std::size_t>(a)].assign(observed.begin(), observed.end());
    if (observed.size() < 2) out.unperturbable.push_back(a);
  }

  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    bool selected = policy.kind == PerturbPolicy::Kind::FlipAll ||
                    rng.uniform01() < policy.rate;
    if (!selected) continue;
    for (int a = 0; a < na; ++a) {
      const auto& values = pool[static_cast<std::size_t>(a)];
      if (values.size() < 2) continue;
      int cur = dataset.sensitive(i, a);
      if (values.size() == 2) {
        out.sensitive(i, a) = values[0] == cur ? values[1] : values[0];
      } else {
        auto pos = static_cast<std::size_t>(
            std::find(values.begin(), values.end(), cur) - values.begin());
        std::size_t k = rng.below(values.size() - 1);
        out.sensitive(i, a) = values[k >= pos ? k + 1 : k];
      }
    }
  }
  return out;
}

}  // namespace fairlens

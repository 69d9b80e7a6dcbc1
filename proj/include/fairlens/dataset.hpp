#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlens/common.hpp"

namespace fairlens {

/// One sensitive attribute: ordered category codes plus the privileged code.
/// Cells are stored as indices 0..n_values-1 in `values` order; the
/// privileged group is whatever index `privileged` names, it is not forced
/// to any fixed position.
struct SensitiveAttributeSpec {
  std::string name;
  std::vector<std::string> values;  // ordered category codes, size >= 2
  std::string privileged;           // must be one of `values`
  std::string column;               // source CSV column (defaults to name)

  int n_values() const { return static_cast<int>(values.size()); }
  int privileged_code() const;
  void validate() const;
};

enum class ColumnType { Auto, Numeric, Categorical };

struct FeatureColumnSpec {
  std::string name;
  ColumnType type = ColumnType::Auto;
};

/// Validation targets for one attribute (value count, privileged-group size).
struct AttributeExpectation {
  std::optional<long> n_values;
  std::optional<long> privileged_count;
};

struct ExpectedCounts {
  std::optional<long> n;
  std::optional<long> n_prep_features;
  std::map<std::string, AttributeExpectation> attributes;
};

struct DatasetManifest {
  std::string csv_path;
  std::vector<FeatureColumnSpec> feature_columns;
  std::vector<SensitiveAttributeSpec> sensitive;
  std::string label_column;
  std::string positive_label;
  std::optional<std::string> stratum_column;  // "legitimate" factor, if any
  std::optional<ExpectedCounts> expected_counts;

  static DatasetManifest from_json_file(const std::string& path);
  static DatasetManifest from_json_text(const std::string& text);
  void validate() const;
};

struct Dataset {
  Matrix features;    // n x n_d, each entry in [0, 1] after preprocessing
  IntMatrix sensitive;  // n x n_a category codes
  IntVector labels;   // n entries in {0, 1}
  std::vector<SensitiveAttributeSpec> attributes;
  std::vector<std::string> feature_names;   // prepared column names
  std::vector<std::string> feature_source;  // raw column each came from
  std::vector<int> stratum;                 // per-row stratum codes, may be empty
  std::vector<std::string> stratum_values;
  std::vector<std::string> flags;           // e.g. constant-column notes

  Index n() const { return labels.size(); }
  Index n_features() const { return features.cols(); }
  int n_attributes() const { return static_cast<int>(attributes.size()); }

  /// 64-bit hash of canonicalized content; printed in every report.
  std::uint64_t fingerprint() const;
};

/// Hard predictions aligned to a Dataset, with optional scores.
/// Invariant: when scores are present, hard = 1 iff score >= threshold.
struct PredictionSet {
  IntVector hard;
  std::optional<Vector> scores;
  std::string source;  // "learner:<id>" or "file:<path>"
  std::uint64_t seed = 0;

  static constexpr double kThreshold = 0.5;
  static PredictionSet from_scores(Vector scores, std::string source,
                                   std::uint64_t seed = 0);
  bool from_external_file() const { return source.rfind("file:", 0) == 0; }
  void validate(Index n) const;
};

/// Row indices per attribute value. Groups are disjoint and exhaustive;
/// empty groups are kept (and flagged) so value codes stay aligned.
struct GroupPartition {
  int attribute = 0;
  int privileged = 0;  // value code of the privileged group
  Index n_rows = 0;
  std::vector<std::vector<int>> groups;
  std::vector<int> empty_groups;

  int n_groups() const { return static_cast<int>(groups.size()); }
  std::vector<int> complement(int j) const;
};

// ---------------------------------------------------------------------------
// Raw-column preprocessing

struct RawColumn {
  std::string name;
  ColumnType type = ColumnType::Auto;
  std::vector<std::string> cells;
};

struct PreprocessResult {
  Matrix features;
  std::vector<std::string> names;
  std::vector<std::string> source;
  std::vector<std::string> flags;
};

/// One-hot encodes categoricals (full encoding, categories in lexicographic
/// order) and min-max scales numerics to [0,1]. A constant numeric column
/// maps to 0 with a flag rather than failing.
PreprocessResult preprocess(const std::vector<RawColumn>& columns);

// ---------------------------------------------------------------------------
// Ingestion

/// Reads the manifest's CSV (RFC-4180, header row required), drops rows with
/// missing cells ("" or "?"), encodes sensitive attributes and labels, and
/// preprocesses features. Throws ValidationError when expected_counts do not
/// match, ConfigError for unusable files or manifests.
Dataset ingest(const DatasetManifest& manifest);

/// Loads an external prediction CSV (columns row_id, hard[, score]); the
/// row_id column must cover exactly 0..n-1.
PredictionSet load_predictions(const std::string& path, Index n);

// ---------------------------------------------------------------------------
// Partitioning and attribute algebra

GroupPartition partition(const Dataset& dataset, int attribute);

struct SuperAttribute {
  SensitiveAttributeSpec spec;
  IntVector codes;
};

/// Cartesian-product recoding of >= 2 attributes into one "super" attribute.
/// The value set has exactly prod(n_values) entries; exceeding `cap` is an
/// error because group costs grow with the product.
SuperAttribute degenerate_super_attribute(const Dataset& dataset,
                                          const std::vector<int>& attrs,
                                          long cap = 4096);

/// Returns a copy of the dataset with the super attribute appended.
Dataset with_super_attribute(const Dataset& dataset, const SuperAttribute& s);

// ---------------------------------------------------------------------------
// Sensitive-attribute perturbation

struct PerturbPolicy {
  enum class Kind { FlipAll, Rate };
  Kind kind = Kind::FlipAll;
  double rate = 1.0;

  static PerturbPolicy flip_all() { return {}; }
  static PerturbPolicy with_rate(double p) {
    return {Kind::Rate, p};
  }
};

struct PerturbResult {
  IntMatrix sensitive;
  std::vector<int> unperturbable;  // attributes with one observed value
};

/// Replaces each selected cell by a different observed value: binary
/// attributes flip deterministically, multi-valued ones resample uniformly
/// among the other observed values. Deterministic given the seed.
PerturbResult perturb(const Dataset& dataset, std::uint64_t seed,
                      PerturbPolicy policy = PerturbPolicy::flip_all());

}  // namespace fairlens

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mnar/factorization.hpp"
#include "mnar/propensity.hpp"
#include "mnar/types.hpp"

namespace mnar::io {

enum class TripletFormat { Tsv, Csv };

TripletFormat parse_triplet_format(const std::string& text);

/// Bidirectional mapping between external ids and dense 0-based indices.
class IdMap {
 public:
  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  /// Index of `id`, inserting it if absent.
  std::size_t intern(const std::string& id);
  /// Index of `id`; throws FormatError if absent.
  std::size_t lookup(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
};

struct TripletData {
  ObservationSample sample;
  IdMap users;
  IdMap items;
};

/// Parses (user-id, item-id, rating[, timestamp]) records. ML100K u.data is tab separated.
/// Ids are remapped to dense indices in order of first appearance. Malformed lines are reported
/// with their 1-based line number; duplicate (user, item) pairs and empty files are errors.
TripletData ingest_triplets(const std::filesystem::path& path, TripletFormat format);
TripletData ingest_triplets(std::istream& in, TripletFormat format);

/// Same, but ids must already exist in the given maps (e.g. a test file keyed by training ids).
ObservationSample ingest_triplets(std::istream& in, TripletFormat format, const IdMap& users, const IdMap& items);
ObservationSample ingest_triplets(const std::filesystem::path& path, TripletFormat format, const IdMap& users,
                                  const IdMap& items);

/// One id per line, line n holding the id of index n.
void write_id_map(const std::filesystem::path& path, const IdMap& map);
IdMap read_id_map(const std::filesystem::path& path);

// Native text formats. Numbers are written with 17 significant digits so they round-trip exactly.
//   observations: "obs v1 U I n" then n lines "u<TAB>i<TAB>rating" with 0-based indices
//   matrix:       "matrix v1 U I" then U lines of I whitespace-separated values
//   model:        "pmfmodel v1 U I d" then c, a (U), b (I), V (d x U, row-major), W (d x I, row-major)

void write_observations(std::ostream& out, const ObservationSample& obs);
void write_observations(const std::filesystem::path& path, const ObservationSample& obs);
ObservationSample read_observations(std::istream& in);
ObservationSample read_observations(const std::filesystem::path& path);

void write_matrix(std::ostream& out, std::size_t rows, std::size_t cols, std::span<const double> values);
void write_matrix(const std::filesystem::path& path, const RatingMatrix& m);
void write_matrix(const std::filesystem::path& path, const PropensityMatrix& m);
RatingMatrix read_rating_matrix(std::istream& in);
RatingMatrix read_rating_matrix(const std::filesystem::path& path);
PropensityMatrix read_propensity_matrix(const std::filesystem::path& path);

void save_model(std::ostream& out, const FactorModel& model);
void save_model(const std::filesystem::path& path, const FactorModel& model);
FactorModel load_model(std::istream& in);
FactorModel load_model(const std::filesystem::path& path);

/// Delimiter-separated "user-id, item-id, f1, f2, ..." records, one per (user, item) cell.
/// Every cell of the users x items grid must be present exactly once.
PairFeatures read_pair_features(const std::filesystem::path& path, TripletFormat format, const IdMap& users,
                                const IdMap& items);

/// Flat "key = value" configuration; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> read_config(std::istream& in);
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Shortest-exact decimal rendering with 17 significant digits.
std::string format_double(double value);

}  // namespace mnar::io

#include "mnar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mnar/errors.hpp"

namespace mnar::io {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delimiter, start);
    fields.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

char delimiter_of(TripletFormat format) { return format == TripletFormat::Tsv ? '\t' : ','; }

bool parse_number(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw FormatError("error while writing '" + path.string() + "'");
}

// Whitespace-separated token reader with truncation detection.
class Tokens {
 public:
  Tokens(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::string word() {
    std::string token;
    if (!(in_ >> token)) throw FormatError(what_ + " is truncated");
    return token;
  }

  double number() {
    const std::string token = word();
    double v;
    if (!parse_number(token, v)) throw FormatError(what_ + ": '" + token + "' is not a number");
    return v;
  }

  std::size_t count() {
    const std::string token = word();
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw FormatError(what_ + ": '" + token + "' is not a non-negative integer");
    return v;
  }

  void expect_end() {
    std::string extra;
    if (in_ >> extra) throw FormatError(what_ + " has trailing content '" + extra + "'");
  }

 private:
  std::istream& in_;
  std::string what_;
};

void expect_header(Tokens& tokens, const std::string& magic, const std::string& what) {
  const std::string got_magic = tokens.word();
  const std::string got_version = tokens.word();
  if (got_magic != magic || got_version != "v1") {
    throw FormatError(what + ": version mismatch, expected '" + magic + " v1' but found '" + got_magic + " " +
                      got_version + "'");
  }
}

struct ParsedRecord {
  std::string user;
  std::string item;
  double rating;
};

template <class Emit>
void parse_triplet_lines(std::istream& in, TripletFormat format, Emit&& emit) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter_of(format));
    if (fields.size() != 3 && fields.size() != 4) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 3 or 4 fields, found " +
                        std::to_string(fields.size()));
    }
    double rating;
    if (fields[0].empty() || fields[1].empty() || !parse_number(fields[2], rating) || !std::isfinite(rating)) {
      throw FormatError("line " + std::to_string(line_no) + ": malformed record '" + trim(line) + "'");
    }
    emit(ParsedRecord{fields[0], fields[1], rating}, line_no);
    ++records;
  }
  if (records == 0) throw FormatError("triplet input contains no records");
}

}  // namespace

TripletFormat parse_triplet_format(const std::string& text) {
  if (text == "tsv" || text == "ml100k" || text == "ml100k-tsv") return TripletFormat::Tsv;
  if (text == "csv") return TripletFormat::Csv;
  throw InvalidArgument("unknown triplet format '" + text + "' (expected tsv or csv)");
}

std::size_t IdMap::intern(const std::string& id) {
  const auto [it, inserted] = index_.try_emplace(id, ids_.size());
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::size_t IdMap::lookup(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw FormatError("unknown id '" + id + "'");
  return it->second;
}

TripletData ingest_triplets(std::istream& in, TripletFormat format) {
  IdMap users;
  IdMap items;
  std::vector<Rating> entries;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  parse_triplet_lines(in, format, [&](const ParsedRecord& rec, std::size_t line_no) {
    const std::size_t u = users.intern(rec.user);
    const std::size_t i = items.intern(rec.item);
    const auto [it, inserted] = seen.try_emplace({u, i}, line_no);
    if (!inserted) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate (user, item) pair (" + rec.user + ", " +
                        rec.item + "), first seen on line " + std::to_string(it->second));
    }
    entries.push_back({u, i, rec.rating});
  });
  ObservationSample sample(users.size(), items.size(), std::move(entries));
  return {std::move(sample), std::move(users), std::move(items)};
}

TripletData ingest_triplets(const std::filesystem::path& path, TripletFormat format) {
  auto in = open_input(path);
  return ingest_triplets(in, format);
}

ObservationSample ingest_triplets(std::istream& in, TripletFormat format, const IdMap& users, const IdMap& items) {
  std::vector<Rating> entries;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  parse_triplet_lines(in, format, [&](const ParsedRecord& rec, std::size_t line_no) {
    if (!users.contains(rec.user) || !items.contains(rec.item)) {
      throw FormatError("line " + std::to_string(line_no) + ": id pair (" + rec.user + ", " + rec.item +
                        ") not present in the id maps");
    }
    const std::size_t u = users.lookup(rec.user);
    const std::size_t i = items.lookup(rec.item);
    if (!seen.try_emplace({u, i}, line_no).second) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate (user, item) pair (" + rec.user + ", " +
                        rec.item + ")");
    }
    entries.push_back({u, i, rec.rating});
  });
  return ObservationSample(users.size(), items.size(), std::move(entries));
}

ObservationSample ingest_triplets(const std::filesystem::path& path, TripletFormat format, const IdMap& users,
                                  const IdMap& items) {
  auto in = open_input(path);
  return ingest_triplets(in, format, users, items);
}

void write_id_map(const std::filesystem::path& path, const IdMap& map) {
  auto out = open_output(path);
  for (const auto& id : map.ids()) out << id << '\n';
  finish_output(out, path);
}

IdMap read_id_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  IdMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string id = trim(line);
    if (id.empty()) continue;
    if (map.contains(id)) throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": duplicate id");
    map.intern(id);
  }
  return map;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_observations(std::ostream& out, const ObservationSample& obs) {
  out << "obs v1 " << obs.rows() << ' ' << obs.cols() << ' ' << obs.size() << '\n';
  for (const Rating& r : obs.entries()) out << r.user << '\t' << r.item << '\t' << format_double(r.value) << '\n';
}

void write_observations(const std::filesystem::path& path, const ObservationSample& obs) {
  auto out = open_output(path);
  write_observations(out, obs);
  finish_output(out, path);
}

ObservationSample read_observations(std::istream& in) {
  Tokens tokens(in, "observation file");
  expect_header(tokens, "obs", "observation file");
  const std::size_t rows = tokens.count();
  const std::size_t cols = tokens.count();
  const std::size_t n = tokens.count();
  std::vector<Rating> entries;
  entries.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t u = tokens.count();
    const std::size_t i = tokens.count();
    entries.push_back({u, i, tokens.number()});
  }
  tokens.expect_end();
  try {
    return ObservationSample(rows, cols, std::move(entries));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("observation file: ") + e.what());
  }
}

ObservationSample read_observations(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_observations(in);
}

void write_matrix(std::ostream& out, std::size_t rows, std::size_t cols, std::span<const double> values) {
  out << "matrix v1 " << rows << ' ' << cols << '\n';
  for (std::size_t u = 0; u < rows; ++u) {
    for (std::size_t i = 0; i < cols; ++i) {
      if (i) out << ' ';
      out << format_double(values[u * cols + i]);
    }
    out << '\n';
  }
}

void write_matrix(const std::filesystem::path& path, const RatingMatrix& m) {
  auto out = open_output(path);
  write_matrix(out, m.rows(), m.cols(), m.values());
  finish_output(out, path);
}

void write_matrix(const std::filesystem::path& path, const PropensityMatrix& m) {
  auto out = open_output(path);
  write_matrix(out, m.rows(), m.cols(), m.values());
  finish_output(out, path);
}

namespace {

std::pair<std::size_t, std::size_t> read_matrix_values(std::istream& in, std::vector<double>& values) {
  Tokens tokens(in, "matrix file");
  expect_header(tokens, "matrix", "matrix file");
  const std::size_t rows = tokens.count();
  const std::size_t cols = tokens.count();
  if (rows == 0 || cols == 0) throw FormatError("matrix file: dimensions must be positive");
  values.resize(rows * cols);
  for (double& v : values) v = tokens.number();
  tokens.expect_end();
  return {rows, cols};
}

}  // namespace

RatingMatrix read_rating_matrix(std::istream& in) {
  std::vector<double> values;
  const auto [rows, cols] = read_matrix_values(in, values);
  return RatingMatrix(rows, cols, std::move(values));
}

RatingMatrix read_rating_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_rating_matrix(in);
}

PropensityMatrix read_propensity_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> values;
  const auto [rows, cols] = read_matrix_values(in, values);
  try {
    return PropensityMatrix(rows, cols, std::move(values));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_model(std::ostream& out, const FactorModel& model) {
  const std::size_t users = model.users();
  const std::size_t items = model.items();
  const std::size_t d = model.rank();
  out << "pmfmodel v1 " << users << ' ' << items << ' ' << d << '\n';
  out << format_double(model.global_offset()) << '\n';
  auto line = [&](std::size_t n, auto&& value) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) out << ' ';
      out << format_double(value(j));
    }
    out << '\n';
  };
  line(users, [&](std::size_t u) { return model.user_offset(u); });
  line(items, [&](std::size_t i) { return model.item_offset(i); });
  for (std::size_t k = 0; k < d; ++k) line(users, [&](std::size_t u) { return model.user_factor(u)[k]; });
  for (std::size_t k = 0; k < d; ++k) line(items, [&](std::size_t i) { return model.item_factor(i)[k]; });
}

void save_model(const std::filesystem::path& path, const FactorModel& model) {
  auto out = open_output(path);
  save_model(out, model);
  finish_output(out, path);
}

FactorModel load_model(std::istream& in) {
  Tokens tokens(in, "model file");
  expect_header(tokens, "pmfmodel", "model file");
  const std::size_t users = tokens.count();
  const std::size_t items = tokens.count();
  const std::size_t d = tokens.count();
  if (d == 0) throw FormatError("model file: rank d must be >= 1");
  if (users == 0 || items == 0) throw FormatError("model file: dimensions must be positive");

  FactorModel model(users, items, d);
  model.global_offset() = tokens.number();
  for (std::size_t u = 0; u < users; ++u) model.user_offset(u) = tokens.number();
  for (std::size_t i = 0; i < items; ++i) model.item_offset(i) = tokens.number();
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t u = 0; u < users; ++u) model.user_factor(u)[k] = tokens.number();
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < items; ++i) model.item_factor(i)[k] = tokens.number();
  tokens.expect_end();
  for (double v : model.params())
    if (!std::isfinite(v)) throw FormatError("model file: non-finite parameter");
  return model;
}

FactorModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_model(in);
}

PairFeatures read_pair_features(const std::filesystem::path& path, TripletFormat format, const IdMap& users,
                                const IdMap& items) {
  auto in = open_input(path);
  const std::size_t rows = users.size();
  const std::size_t cols = items.size();
  std::size_t dim = 0;
  bool dim_known = false;
  std::vector<double> values;
  std::vector<bool> filled(rows * cols, false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter_of(format));
    const std::string where = path.string() + ": line " + std::to_string(line_no);
    if (fields.size() < 3) throw FormatError(where + ": expected user, item and at least one feature");
    if (!dim_known) {
      dim = fields.size() - 2;
      dim_known = true;
      values.assign(rows * cols * dim, 0.0);
    }
    if (fields.size() - 2 != dim) throw FormatError(where + ": feature count differs from earlier records");
    if (!users.contains(fields[0]) || !items.contains(fields[1])) throw FormatError(where + ": unknown user or item id");
    const std::size_t cell = users.lookup(fields[0]) * cols + items.lookup(fields[1]);
    if (filled[cell]) throw FormatError(where + ": duplicate (user, item) pair");
    filled[cell] = true;
    for (std::size_t j = 0; j < dim; ++j) {
      double v;
      if (!parse_number(fields[j + 2], v) || !std::isfinite(v)) throw FormatError(where + ": bad feature value");
      values[cell * dim + j] = v;
    }
  }
  for (bool f : filled)
    if (!f) throw FormatError(path.string() + ": features missing for some (user, item) cells");
  return PairFeatures(rows, cols, dim, std::move(values));
}

std::map<std::string, std::string> read_config(std::istream& in) {
  std::map<std::string, std::string> config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    config[key] = trim(body.substr(eq + 1));
  }
  return config;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_config(in);
}

}  // namespace mnar::io

#include "spinone/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spinone/errors.hpp"

namespace fs = std::filesystem;

namespace spinone {

namespace {

// Shard columns: the exported columns followed by bookkeeping.
const std::vector<std::string>& shard_columns() {
  static const std::vector<std::string> cols = [] {
    auto c = export_columns();
    c.insert(c.end(), {"residual", "config_hash", "seed", "seconds"});
    return c;
  }();
  return cols;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short tag for a lambda value usable in file names.
std::string lambda_tag(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", lambda);
  return buf;
}

std::string join(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out;
}

// Flags never contain commas or quotes (sanitized at construction), so fields
// split on commas directly.
std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters");
  return v;
}

std::string export_line(const StoreRow& r) {
  const ObservablePoint& p = r.point;
  return join({num(p.lambda), std::to_string(p.L), num(p.D), num(p.delta), num(p.fidelity), num(p.susceptibility),
               num(p.entropy_bits), to_string(p.solver), num(p.max_discarded_weight), p.flags});
}

std::string shard_line(const StoreRow& r) {
  return export_line(r) + ',' + num(r.point.residual) + ',' + r.config_hash + ',' + std::to_string(r.seed) + ',' +
         num(r.seconds);
}

// Fills the exported fields of `r` from `f`; returns false on a parse error.
bool parse_export_fields(const std::vector<std::string>& f, StoreRow& r) {
  try {
    ObservablePoint& p = r.point;
    p.lambda = parse_double(f[0]);
    p.L = std::stoi(f[1]);
    p.D = parse_double(f[2]);
    p.delta = parse_double(f[3]);
    p.fidelity = parse_double(f[4]);
    p.susceptibility = parse_double(f[5]);
    p.entropy_bits = parse_double(f[6]);
    p.solver = solver_from_string(f[7]);
    p.max_discarded_weight = parse_double(f[8]);
    p.flags = f[9];
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

void sort_rows(std::vector<StoreRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const StoreRow& a, const StoreRow& b) {
    if (a.point.L != b.point.L) return a.point.L < b.point.L;
    return a.point.D < b.point.D;
  });
}

nlohmann::ordered_json json_number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string row_key(double lambda, int L, double D, double delta, SolverKind solver, const std::string& config_hash) {
  return num(lambda) + '|' + std::to_string(L) + '|' + num(D) + '|' + num(delta) + '|' + to_string(solver) + '|' +
         config_hash;
}

std::string StoreRow::key() const {
  return row_key(point.lambda, point.L, point.D, point.delta, point.solver, config_hash);
}

std::string stable_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& export_columns() {
  static const std::vector<std::string> cols{"lambda", "L", "D", "delta", "fidelity", "susceptibility",
                                             "entropy_bits", "solver", "max_discarded_weight", "flags"};
  return cols;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot open for writing: " + tmp);
    f << content;
    f.flush();
    if (!f) fail(ErrorCode::io, "failed writing: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

ResultStore::ResultStore(std::string dir, bool create) : dir_(std::move(dir)) {
  std::error_code ec;
  if (create) {
    fs::create_directories(fs::path(dir_) / "checkpoints", ec);
    if (ec) fail(ErrorCode::io, "cannot create store directory " + dir_ + ": " + ec.message());
  } else if (!fs::is_directory(dir_, ec)) {
    fail(ErrorCode::io, "store directory does not exist: " + dir_);
  }
}

std::string ResultStore::shard_path(double lambda, int L) const {
  return (fs::path(dir_) / ("shard_lambda" + lambda_tag(lambda) + "_L" + std::to_string(L) + ".csv")).string();
}

std::string ResultStore::manifest_path() const { return (fs::path(dir_) / "manifest.json").string(); }

std::string ResultStore::checkpoint_path(double lambda, int L) const {
  return (fs::path(dir_) / "checkpoints" / ("lambda" + lambda_tag(lambda) + "_L" + std::to_string(L) + ".json"))
      .string();
}

std::vector<StoreRow> read_shard_file(const std::string& path) {
  std::vector<StoreRow> rows;
  std::ifstream f(path, std::ios::binary);
  if (!f) return rows;
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::istringstream in(content);
  std::string line;
  bool header = true;
  const std::size_t ncols = shard_columns().size();
  std::size_t consumed = 0;
  while (std::getline(in, line)) {
    consumed += line.size() + 1;
    // A final line without its newline is a torn append.
    if (consumed > content.size()) break;
    if (header) {
      header = false;
      if (line != join(shard_columns())) fail(ErrorCode::io, "unexpected shard header in " + path);
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != ncols) continue;
    StoreRow r;
    if (!parse_export_fields(fields, r)) continue;
    try {
      r.point.residual = parse_double(fields[10]);
      r.config_hash = fields[11];
      r.seed = std::stoull(fields[12]);
      r.seconds = parse_double(fields[13]);
    } catch (const std::exception&) {
      continue;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<StoreRow> ResultStore::load_shard(double lambda, int L) const {
  return read_shard_file(shard_path(lambda, L));
}

std::vector<StoreRow> ResultStore::load_all() const {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("shard_", 0) == 0 && e.path().extension() == ".csv")
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<StoreRow> rows;
  for (const auto& f : files) {
    auto part = read_shard_file(f);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

void ResultStore::append(const StoreRow& row) const {
  const std::string path = shard_path(row.point.lambda, row.point.L);
  std::error_code ec;
  const bool fresh = !fs::exists(path, ec) || fs::file_size(path, ec) == 0;
  bool needs_newline = false;
  if (!fresh) {
    std::ifstream in(path, std::ios::binary);
    in.seekg(-1, std::ios::end);
    char last = '\n';
    in.get(last);
    needs_newline = last != '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::app);
  if (!f) fail(ErrorCode::io, "cannot append to shard " + path);
  if (fresh) f << join(shard_columns()) << '\n';
  // Terminate a torn line so it is skipped as malformed rather than merged.
  if (needs_newline) f << '\n';
  f << shard_line(row) << '\n';
  f.flush();
  if (!f) fail(ErrorCode::io, "failed writing shard " + path);
}

bool ResultStore::has_manifest() const { return fs::exists(manifest_path()); }

nlohmann::json ResultStore::read_manifest() const {
  std::ifstream f(manifest_path());
  if (!f) fail(ErrorCode::io, "cannot read manifest in " + dir_);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("malformed manifest: ") + e.what());
  }
}

void ResultStore::write_manifest(const nlohmann::json& manifest) const {
  write_file_atomic(manifest_path(), manifest.dump(2) + '\n');
}

std::string export_csv(std::vector<StoreRow> rows) {
  sort_rows(rows);
  std::string out = join(export_columns()) + '\n';
  for (const auto& r : rows) out += export_line(r) + '\n';
  return out;
}

std::string export_json(std::vector<StoreRow> rows) {
  sort_rows(rows);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    const ObservablePoint& p = r.point;
    nlohmann::ordered_json o;
    o["lambda"] = json_number(p.lambda);
    o["L"] = p.L;
    o["D"] = json_number(p.D);
    o["delta"] = json_number(p.delta);
    o["fidelity"] = json_number(p.fidelity);
    o["susceptibility"] = json_number(p.susceptibility);
    o["entropy_bits"] = json_number(p.entropy_bits);
    o["solver"] = to_string(p.solver);
    o["max_discarded_weight"] = json_number(p.max_discarded_weight);
    o["flags"] = p.flags;
    arr.push_back(std::move(o));
  }
  nlohmann::ordered_json doc;
  doc["columns"] = export_columns();
  doc["rows"] = std::move(arr);
  return doc.dump(2) + '\n';
}

std::vector<StoreRow> parse_export_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != join(export_columns())) fail(ErrorCode::io, "unexpected export header");
  std::vector<StoreRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    StoreRow r;
    if (fields.size() != export_columns().size() || !parse_export_fields(fields, r))
      fail(ErrorCode::io, "malformed export line: " + line);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string export_store(const std::string& dir, const std::string& format) {
  if (format != "csv" && format != "json") fail(ErrorCode::usage, "unknown export format '" + format + "'");
  const ResultStore store(dir, false);
  auto rows = store.load_all();
  return format == "csv" ? export_csv(std::move(rows)) : export_json(std::move(rows));
}

}  // namespace spinone

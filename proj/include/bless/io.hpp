#pragma once

// On-disk formats. All multi-byte fields are little-endian; payloads are raw
// arrays in row-major order with the first axis fastest.
//
//   volume   "BLSV": version u32, ndim u32, dims u32[ndim], count u32,
//            dtype u8 (0 = uint8, 1 = float64), then count*prod(dims) values.
//   ensemble "BLSB": version u32, B u32, M u32, P u32, float64 values in
//            (replicate, voxel, covariate) order with covariate fastest,
//            closed by an FNV-1a 64 checksum of every preceding byte.
//   state    "BLST": version u32, M u32, P u32, the variational arrays in a
//            fixed order, closed by the same checksum.
//
// Run configuration is line-oriented "key=value" text; '#' starts a comment,
// keys outside the registry are a hard error rather than a silent ignore.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bless/math.hpp"

namespace bless {

struct Fnv1a {
  std::uint64_t h = 14695981039346656037ull;
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  }
};

namespace detail {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw config_error("cannot open for writing: " + path);
    path_ = path;
  }
  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    hash_.update(data, n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void f64_array(const double* v, std::size_t n) { bytes(v, 8 * n); }
  std::uint64_t checksum() const { return hash_.h; }
  void close_with_checksum() {
    const std::uint64_t h = hash_.h;
    out_.write(reinterpret_cast<const char*>(&h), 8);
    close();
  }
  void close() {
    out_.close();
    if (!out_) throw config_error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
  Fnv1a hash_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path);
    in.seekg(0, std::ios::end);
    buf_.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(buf_.data()),
            static_cast<std::streamsize>(buf_.size()));
    if (!in) throw config_error("read failed: " + path);
  }
  void bytes(void* out, std::size_t n) {
    if (pos_ + n > buf_.size()) throw config_error("truncated file: " + path_);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  std::size_t remaining() const { return buf_.size() - pos_; }
  std::uint64_t checksum_so_far() const {
    Fnv1a f;
    f.update(buf_.data(), pos_);
    return f.h;
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// ----------------------------------------------------------------- volumes

struct Volume {
  std::vector<std::uint32_t> dims;
  std::uint32_t count = 0;
  std::uint8_t dtype = 1;  // 0 = uint8, 1 = float64
  std::vector<std::uint8_t> u8;
  std::vector<double> f64;

  std::size_t frame_size() const {
    std::size_t s = 1;
    for (auto d : dims) s *= d;
    return s;
  }
};

inline void write_volume(const std::string& path, const Volume& v) {
  if (v.dims.size() != 2 && v.dims.size() != 3)
    throw config_error("volume must be 2-d or 3-d");
  const std::size_t total = v.frame_size() * v.count;
  if (v.dtype == 0 ? v.u8.size() != total : v.f64.size() != total)
    throw config_error("volume payload does not match header");
  detail::BinWriter w(path);
  w.bytes("BLSV", 4);
  w.u32(1u);
  w.u32(static_cast<std::uint32_t>(v.dims.size()));
  for (auto d : v.dims) w.u32(d);
  w.u32(v.count);
  w.u8(v.dtype);
  if (v.dtype == 0)
    w.bytes(v.u8.data(), v.u8.size());
  else
    w.f64_array(v.f64.data(), v.f64.size());
  w.close();
}

inline Volume read_volume(const std::string& path) {
  detail::BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "BLSV", 4) != 0)
    throw config_error("not a volume file: " + path);
  if (r.u32() != 1u) throw config_error("unsupported volume version: " + path);
  Volume v;
  const std::uint32_t ndim = r.u32();
  if (ndim != 2 && ndim != 3) throw config_error("volume must be 2-d or 3-d: " + path);
  v.dims.resize(ndim);
  for (auto& d : v.dims) {
    d = r.u32();
    if (d == 0) throw config_error("volume axis of length zero: " + path);
  }
  v.count = r.u32();
  v.dtype = r.u8();
  if (v.dtype > 1) throw config_error("unknown volume dtype: " + path);
  const std::size_t total = v.frame_size() * v.count;
  if (v.dtype == 0) {
    v.u8.resize(total);
    r.bytes(v.u8.data(), total);
  } else {
    v.f64.resize(total);
    r.bytes(v.f64.data(), 8 * total);
  }
  if (r.remaining() != 0) throw config_error("trailing bytes in volume file: " + path);
  return v;
}

// --------------------------------------------------------------- ensembles

struct Ensemble {
  std::uint32_t B = 0, M = 0, P = 0;
  std::vector<double> values;  // (b, j, p), p fastest

  double& at(std::size_t b, std::size_t j, std::size_t p) {
    return values[(b * M + j) * P + p];
  }
  double at(std::size_t b, std::size_t j, std::size_t p) const {
    return values[(b * M + j) * P + p];
  }
};

inline void write_ensemble(const std::string& path, const Ensemble& e) {
  if (e.values.size() != static_cast<std::size_t>(e.B) * e.M * e.P)
    throw config_error("ensemble payload does not match header");
  detail::BinWriter w(path);
  w.bytes("BLSB", 4);
  w.u32(1u);
  w.u32(e.B);
  w.u32(e.M);
  w.u32(e.P);
  w.f64_array(e.values.data(), e.values.size());
  w.close_with_checksum();
}

inline Ensemble read_ensemble(const std::string& path) {
  detail::BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "BLSB", 4) != 0)
    throw config_error("not an ensemble file: " + path);
  if (r.u32() != 1u) throw config_error("unsupported ensemble version: " + path);
  Ensemble e;
  e.B = r.u32();
  e.M = r.u32();
  e.P = r.u32();
  e.values.resize(static_cast<std::size_t>(e.B) * e.M * e.P);
  r.bytes(e.values.data(), 8 * e.values.size());
  const std::uint64_t expect = r.checksum_so_far();
  if (r.u64() != expect) throw config_error("ensemble checksum mismatch: " + path);
  if (r.remaining() != 0) throw config_error("trailing bytes in ensemble file: " + path);
  return e;
}

// --------------------------------------------------------------- run config

// Registry of every key the tools understand, with defaults. Parsing a file
// that names anything else fails loudly so typos cannot silently revert a
// run to defaults.
inline const std::map<std::string, std::string>& config_registry() {
  static const std::map<std::string, std::string> defaults = {
      {"sim.nx", "50"},
      {"sim.ny", "50"},
      {"sim.n", "500"},
      {"sim.lambda", "1"},
      {"sim.sex_multiplier", "4"},
      {"sim.group_multiplier", "4"},
      {"sim.lesion_size", "3"},
      {"sim.seed", "1"},
      {"model.nu1", "10"},
      {"model.log_nu0_min", "-20"},
      {"model.log_nu0_max", "-1"},
      {"model.nu0_steps", "15"},
      {"model.sigma0_sq", "100"},
      {"model.wishart_df", "0"},  // 0 means "number of covariates"
      {"model.epsilon", "0.001"},
      {"model.max_sweeps", "500"},
      {"model.jitter_spike_only", "0"},
      {"bb.replicates", "1000"},
      {"bb.alpha", "1"},
      {"bb.seed", "1"},
      {"bb.epsilon", "0"},  // 0 means "inherit model.epsilon"
      {"bb.max_failure_fraction", "0.10"},
      {"gibbs.iterations", "15000"},
      {"gibbs.burnin", "5000"},
      {"gibbs.thin", "1"},
      {"gibbs.seed", "1"},
      {"gibbs.theta_mh", "0"},
      {"gibbs.mh_step", "0.5"},
      {"gibbs.save_draws", "0"},
      {"run.workers", "1"},
      {"run.cdt", "2.3"},
      {"run.ci_level", "0.95"},
      {"run.bh_level", "0.05"},
      {"run.tstat_threshold", "1.96"},
  };
  return defaults;
}

struct RunConfig {
  std::map<std::string, std::string> kv = config_registry();

  void set(const std::string& key, const std::string& value) {
    if (!config_registry().count(key)) throw config_error("unknown config key: " + key);
    kv[key] = value;
  }
  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw config_error("unknown config key: " + key);
    return it->second;
  }
  double get_double(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw config_error("config key " + key + " is not a number: " + s);
    }
    if (used != s.size()) throw config_error("config key " + key + " is not a number: " + s);
    return v;
  }
  long long get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t used = 0;
    long long v;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw config_error("config key " + key + " is not an integer: " + s);
    }
    if (used != s.size()) throw config_error("config key " + key + " is not an integer: " + s);
    return v;
  }
  bool get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "0" || s == "false") return false;
    if (s == "1" || s == "true") return true;
    throw config_error("config key " + key + " is not a boolean: " + s);
  }
};

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline void parse_config_text(const std::string& text, RunConfig& cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + " has empty key");
    cfg.set(key, value);
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  parse_config_text(buf.str(), cfg);
  return cfg;
}

// Snapshot with every key materialized; reading it back reproduces the run.
inline void write_config(const std::string& path,
                         const std::map<std::string, std::string>& kv,
                         const std::map<std::string, std::string>& extra = {}) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  for (const auto& [k, v] : extra) out << "# " << k << ": " << v << "\n";
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  out.close();
  if (!out) throw config_error("write failed: " + path);
}

// ---------------------------------------------------------------------- csv

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw config_error("cannot open for writing: " + path);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_quote(fields[i]);
    }
    out_ << "\r\n";
  }
  void close() {
    out_.close();
    if (!out_) throw config_error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace bless

#include "ratemix/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/version.hpp>
#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ratemix::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  std::string t = s;
  t.erase(0, t.find_first_not_of(" \t\r"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  if (t == "inf" || t == "Inf" || t == "+inf") return kInf;
  if (t == "-inf" || t == "-Inf") return -kInf;
  if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ValidationError(context + ": cannot parse '" + s + "' as a number");
  return v;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  header = split_csv(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string csv_context(const fs::path& path, std::size_t row) {
  return path.string() + ":" + std::to_string(row + 2);
}

}  // namespace

SiteTable read_sites(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  if (header.size() < 3 || header[0] != "site_id" || header[1] != "x" || header[2] != "y")
    throw ValidationError(path.string() + ": header must start with site_id,x,y");
  SiteTable t;
  t.covariate_names.assign(header.begin() + 3, header.end());
  t.covariates.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.covariate_names.size()));
  std::set<std::string> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto ctx = csv_context(path, r);
    if (!seen.insert(rows[r][0]).second) throw ValidationError(ctx + ": duplicate site_id '" + rows[r][0] + "'");
    t.ids.push_back(rows[r][0]);
    t.coords.push_back({parse_double(rows[r][1], ctx), parse_double(rows[r][2], ctx)});
    for (std::size_t k = 0; k < t.covariate_names.size(); ++k) {
      const double v = parse_double(rows[r][3 + k], ctx);
      if (!std::isfinite(v)) throw ValidationError(ctx + ": covariates must be finite");
      t.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
    }
  }
  if (t.ids.empty()) throw ValidationError(path.string() + ": no sites");
  return t;
}

void write_sites(const fs::path& path, const SiteTable& sites) {
  std::ostringstream os;
  os << "site_id,x,y";
  for (const auto& n : sites.covariate_names) os << ',' << n;
  os << '\n';
  for (std::size_t s = 0; s < sites.ids.size(); ++s) {
    os << sites.ids[s] << ',' << format_double(sites.coords[s].x) << ',' << format_double(sites.coords[s].y);
    for (Eigen::Index k = 0; k < sites.covariates.cols(); ++k)
      os << ',' << format_double(sites.covariates(static_cast<Eigen::Index>(s), k));
    os << '\n';
  }
  write_file(path, os.str());
}

LongData read_long_data(const fs::path& path, const SiteTable& sites) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  const bool has_censor = header.size() == 4;
  if (header.size() < 3 || header.size() > 4 || header[0] != "site_id" || header[1] != "time_id" ||
      header[2] != "value" || (has_censor && header[3] != "censor"))
    throw ValidationError(path.string() + ": header must be site_id,time_id,value[,censor]");

  std::unordered_map<std::string, std::size_t> site_index;
  for (std::size_t s = 0; s < sites.ids.size(); ++s) site_index[sites.ids[s]] = s;
  LongData d;
  d.site_ids = sites.ids;
  std::unordered_map<std::string, std::size_t> time_index;
  for (const auto& r : rows)
    if (time_index.emplace(r[1], d.time_ids.size()).second) d.time_ids.push_back(r[1]);

  const auto n = static_cast<Eigen::Index>(d.time_ids.size());
  const auto p = static_cast<Eigen::Index>(sites.ids.size());
  d.y = Matrix::Constant(n, p, std::numeric_limits<double>::quiet_NaN());
  if (has_censor) d.censor = Matrix::Constant(n, p, kInf);
  std::vector<char> seen(static_cast<std::size_t>(n * p), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto ctx = csv_context(path, r);
    const auto it = site_index.find(rows[r][0]);
    if (it == site_index.end()) throw ValidationError(ctx + ": unknown site_id '" + rows[r][0] + "'");
    const auto i = static_cast<Eigen::Index>(time_index.at(rows[r][1]));
    const auto j = static_cast<Eigen::Index>(it->second);
    char& flag = seen[static_cast<std::size_t>(i * p + j)];
    if (flag) throw ValidationError(ctx + ": duplicate (site_id, time_id)");
    flag = 1;
    const std::string& v = rows[r][2];
    if (!v.empty() && v != "\r") {
      const double y = parse_double(v, ctx);
      if (!std::isfinite(y) || y < 0.0) throw ValidationError(ctx + ": value must be finite and >= 0");
      d.y(i, j) = y;
    }
    if (has_censor) {
      const double u = parse_double(rows[r][3], ctx);
      if (std::isnan(u) || u < 0.0) throw ValidationError(ctx + ": censor must be >= 0 or inf");
      (*d.censor)(i, j) = u;
    }
  }
  return d;
}

void write_long_data(const fs::path& path, const LongData& data) {
  std::ostringstream os;
  os << "site_id,time_id,value" << (data.censor ? ",censor" : "") << '\n';
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) {
      os << data.site_ids[static_cast<std::size_t>(j)] << ',' << data.time_ids[static_cast<std::size_t>(i)] << ',';
      if (std::isfinite(data.y(i, j))) os << format_double(data.y(i, j));
      if (data.censor) os << ',' << format_double((*data.censor)(i, j));
      os << '\n';
    }
  }
  write_file(path, os.str());
}

Matrix thresholds_from_censor(const LongData& data) {
  if (!data.censor) throw ValidationError("data file has no censor column and no censor_quantile was given");
  Matrix u = *data.censor;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      if (!std::isfinite(data.y(i, j))) u(i, j) = kInf;
  return u;
}

ExceedanceData to_exceedance(const LongData& data, const Matrix& thresholds) {
  Matrix y = data.y;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (std::isinf(thresholds(i, j))) {
        y(i, j) = 0.0;
      } else if (!std::isfinite(y(i, j))) {
        throw ValidationError("missing value at time '" + data.time_ids[static_cast<std::size_t>(i)] +
                              "', site '" + data.site_ids[static_cast<std::size_t>(j)] +
                              "' must have an infinite threshold");
      }
    }
  return ExceedanceData::from_values(std::move(y), thresholds);
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return from_ptree(std::move(tree));
}

Config Config::from_string(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  return from_ptree(std::move(tree));
}

Config Config::from_ptree(boost::property_tree::ptree tree) {
  Config c;
  c.tree_ = std::move(tree);
  return c;
}

bool Config::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::string Config::get(const std::string& key) const {
  auto v = tree_.get_optional<std::string>(key);
  if (!v) throw ValidationError("missing config key '" + key + "'");
  return *v;
}

double Config::get_double(const std::string& key) const { return parse_double(get(key), "config key '" + key + "'"); }

std::size_t Config::get_size(const std::string& key) const {
  const std::string s = get(key);
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': expected a non-negative integer, got '" + s + "'");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const { return static_cast<std::uint64_t>(get_size(key)); }

bool Config::get_bool(const std::string& key) const {
  const std::string s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError("config key '" + key + "': expected true or false, got '" + s + "'");
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}
double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
std::size_t Config::get_size_or(const std::string& key, std::size_t fallback) const {
  return has(key) ? get_size(key) : fallback;
}
bool Config::get_bool_or(const std::string& key, bool fallback) const { return has(key) ? get_bool(key) : fallback; }

void Config::set(const std::string& key, const std::string& value) { tree_.put(key, value); }

std::string Config::canonical() const {
  std::map<std::string, std::map<std::string, std::string>> sorted;
  for (const auto& [section, body] : tree_) {
    auto& sec = sorted[section];
    for (const auto& [key, value] : body) sec[key] = value.data();
  }
  std::ostringstream os;
  for (const auto& [section, body] : sorted) {
    os << '[' << section << "]\n";
    for (const auto& [key, value] : body) os << key << " = " << value << '\n';
  }
  return os.str();
}

SamplerConfig sampler_from_config(const Config& c) {
  SamplerConfig s;
  s.n_iter = c.get_size("sampler.n_iter");
  s.burnin1 = c.get_size("sampler.burnin1");
  s.burnin2 = c.get_size("sampler.burnin2");
  s.adapt_interval = c.get_size_or("sampler.adapt_interval", s.adapt_interval);
  s.omega = c.get_double_or("sampler.omega", s.omega);
  s.p_tar_mala = c.get_double_or("sampler.p_tar_mala", s.p_tar_mala);
  s.p_tar_rw = c.get_double_or("sampler.p_tar_rw", s.p_tar_rw);
  s.mala_band = {c.get_double_or("sampler.mala_band_lo", s.mala_band.lo),
                 c.get_double_or("sampler.mala_band_hi", s.mala_band.hi)};
  s.rw_band = {c.get_double_or("sampler.rw_band_lo", s.rw_band.lo), c.get_double_or("sampler.rw_band_hi", s.rw_band.hi)};
  s.thin = c.get_size_or("sampler.thin", s.thin);
  s.seed = c.has("sampler.seed") ? c.get_u64("sampler.seed") : s.seed;
  s.tau_theta0 = c.get_double_or("sampler.tau_theta0", s.tau_theta0);
  s.tau_lambda0 = c.get_double_or("sampler.tau_lambda0", s.tau_lambda0);
  s.audit_interval = c.get_size_or("sampler.audit_interval", s.audit_interval);
  s.checkpoint_interval = c.get_size_or("sampler.checkpoint_interval", s.checkpoint_interval);
  s.validate();
  return s;
}

PriorConfig priors_from_config(const Config& c) {
  PriorConfig p;
  p.beta1.kappa1 = c.get_double_or("priors.kappa1", p.beta1.kappa1);
  p.tail.kappa2 = c.get_double_or("priors.kappa2", p.tail.kappa2);
  if (!(p.beta1.kappa1 > 0.0) || !(p.tail.kappa2 > 0.0)) throw ValidationError("priors: kappa values must be positive");
  return p;
}

ScenarioSpec scenario_from_config(const Config& c) {
  ScenarioSpec s;
  s.d = c.get_size("simulate.d");
  s.n = c.get_size("simulate.n");
  s.seed = c.get_u64("simulate.seed");
  s.n_predict_sites = c.get_size_or("simulate.n_predict", s.n_predict_sites);
  const std::string cq = c.get_or("simulate.censor_quantile", "0.75");
  if (cq == "none") s.censor_quantile.reset();
  else s.censor_quantile = parse_double(cq, "config key 'simulate.censor_quantile'");
  s.hyper.alpha_coefs = {c.get_double_or("simulate.alpha0", 1.0), c.get_double_or("simulate.alpha1", 1.0),
                         c.get_double_or("simulate.alpha2", 1.0), c.get_double_or("simulate.alpha3", 1.0)};
  s.hyper.beta1 = c.get_double_or("simulate.beta1", 5.0);
  s.hyper.beta2 = c.get_double_or("simulate.beta2", 5.0);
  s.hyper.rho = c.get_double_or("simulate.rho", 1.0);
  s.covariate_range = c.get_double_or("simulate.covariate_range", s.covariate_range);
  const std::string cop = c.get_or("simulate.copula", "gaussian");
  if (cop == "gaussian") s.copula = CopulaKind::gaussian;
  else if (cop == "student_t") s.copula = CopulaKind::student_t;
  else throw ValidationError("config key 'simulate.copula': expected gaussian or student_t, got '" + cop + "'");
  s.nu = c.get_double_or("simulate.nu", kInf);
  s.validate();
  return s;
}

std::string content_hash(const std::string& bytes) {
  const std::string head = "blob " + std::to_string(bytes.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("content_hash: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("content_hash: digest failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string file_hash(const fs::path& path) { return content_hash(read_file(path)); }

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string version_string() {
  std::ostringstream os;
  os << "ratemix 0.1.0; eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION
     << "; boost " << BOOST_LIB_VERSION << "; nlohmann_json " << NLOHMANN_JSON_VERSION_MAJOR << '.'
     << NLOHMANN_JSON_VERSION_MINOR;
  return os.str();
}

std::string manifest_json(const std::string& command, const Config& config,
                          const std::vector<std::pair<std::string, fs::path>>& inputs) {
  json m;
  m["command"] = command;
  m["config_text"] = config.canonical();
  json cfg = json::object();
  for (const auto& [section, body] : config.tree())
    for (const auto& [key, value] : body) cfg[section][key] = value.data();
  m["config"] = cfg;
  for (const char* key : {"simulate.seed", "sampler.seed", "predict.seed", "chi.seed"})
    if (config.has(key)) m["seed"] = config.get(key);
  if (config.has("fit.variant")) m["variant"] = config.get("fit.variant");
  json in = json::object();
  for (const auto& [name, path] : inputs) in[name] = {{"path", path.string()}, {"hash", file_hash(path)}};
  m["inputs"] = in;
  m["version"] = version_string();
  m["run_hash"] = content_hash(command + '\n' + config.canonical() + '\n' + in.dump());
  return m.dump(2) + '\n';
}

Config config_from_manifest(const fs::path& path) {
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": not a manifest: " + e.what());
  }
  if (!m.contains("config_text")) throw ValidationError(path.string() + ": manifest has no config_text");
  return Config::from_string(m["config_text"].get<std::string>());
}

namespace {

json doubles(const std::vector<double>& v) {
  std::vector<std::uint8_t> bytes(v.size() * sizeof(double));
  if (!v.empty()) std::memcpy(bytes.data(), v.data(), bytes.size());
  return json::binary(std::move(bytes));
}

std::vector<double> doubles_from(const json& j) {
  const auto& b = j.get_binary();
  if (b.size() % sizeof(double) != 0) throw ValidationError("checkpoint: corrupt double array");
  std::vector<double> v(b.size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), b.data(), b.size());
  return v;
}

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", doubles(std::vector<double>(m.data(), m.data() + m.size()))}};
}

Matrix matrix_from(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto v = doubles_from(j.at("data"));
  if (static_cast<Eigen::Index>(v.size()) != r * c) throw ValidationError("checkpoint: matrix size mismatch");
  Matrix m(r, c);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Phase phase_from(const std::string& s) {
  if (s == "adapt1") return Phase::adapt1;
  if (s == "adapt2") return Phase::adapt2;
  if (s == "sampling") return Phase::sampling;
  throw ValidationError("checkpoint: unknown phase '" + s + "'");
}

json snapshot_json(const ChainSnapshot& s) {
  return {{"next_iter", s.next_iter},
          {"theta", doubles(s.theta)},
          {"latents", matrix_json(s.latents)},
          {"tau_theta", s.tuning.tau_theta},
          {"tau_lambda", s.tuning.tau_lambda},
          {"window_rw", s.tuning.window_rw_accepts},
          {"window_mala", s.tuning.window_mala_accepts},
          {"window_iters", s.tuning.window_iters},
          {"phase", phase_name(s.tuning.phase)},
          {"rng", s.rng_state},
          {"sampling_rw", s.sampling_rw_accepts},
          {"sampling_mala", s.sampling_mala_accepts},
          {"sampling_iters", s.sampling_iters}};
}

ChainSnapshot snapshot_from(const json& j) {
  ChainSnapshot s;
  s.next_iter = j.at("next_iter").get<std::size_t>();
  s.theta = doubles_from(j.at("theta"));
  s.latents = matrix_from(j.at("latents"));
  s.tuning.tau_theta = j.at("tau_theta").get<double>();
  s.tuning.tau_lambda = j.at("tau_lambda").get<double>();
  s.tuning.window_rw_accepts = j.at("window_rw").get<std::size_t>();
  s.tuning.window_mala_accepts = j.at("window_mala").get<std::size_t>();
  s.tuning.window_iters = j.at("window_iters").get<std::size_t>();
  s.tuning.phase = phase_from(j.at("phase").get<std::string>());
  s.rng_state = j.at("rng").get<std::string>();
  s.sampling_rw_accepts = j.at("sampling_rw").get<std::size_t>();
  s.sampling_mala_accepts = j.at("sampling_mala").get<std::size_t>();
  s.sampling_iters = j.at("sampling_iters").get<std::size_t>();
  return s;
}

json output_json(const ChainOutput& o) {
  json hist = json::array();
  for (const auto& w : o.history)
    hist.push_back({w.iter_end, phase_name(w.phase), w.rw_rate, w.mala_rate, w.tau_theta, w.tau_lambda});
  json stored = json::array();
  for (const auto& m : o.stored_latents) stored.push_back(matrix_json(m));
  json cells = json::array();
  for (const auto& [r, c] : o.traced_cells) cells.push_back({r, c});
  return {{"names", o.names},
          {"n_iter", o.n_iter},
          {"burnin", o.burnin},
          {"thin", o.thin},
          {"hyper_trace", doubles(o.hyper_trace)},
          {"thinned_iters", o.thinned_iters},
          {"latent_trace", doubles(o.latent_trace)},
          {"traced_cells", cells},
          {"stored_columns", o.stored_columns},
          {"stored_iters", o.stored_iters},
          {"stored_latents", stored},
          {"history", hist},
          {"sampling_rw_rate", o.sampling_rw_rate},
          {"sampling_mala_rate", o.sampling_mala_rate},
          {"audit_max_diff", o.audit_max_diff},
          {"final_state", snapshot_json(o.final_state)}};
}

ChainOutput output_from(const json& j) {
  ChainOutput o;
  o.names = j.at("names").get<std::vector<std::string>>();
  o.n_iter = j.at("n_iter").get<std::size_t>();
  o.burnin = j.at("burnin").get<std::size_t>();
  o.thin = j.at("thin").get<std::size_t>();
  o.hyper_trace = doubles_from(j.at("hyper_trace"));
  o.thinned_iters = j.at("thinned_iters").get<std::vector<std::size_t>>();
  o.latent_trace = doubles_from(j.at("latent_trace"));
  for (const auto& c : j.at("traced_cells")) o.traced_cells.emplace_back(c[0].get<std::size_t>(), c[1].get<std::size_t>());
  o.stored_columns = j.at("stored_columns").get<std::vector<std::size_t>>();
  o.stored_iters = j.at("stored_iters").get<std::vector<std::size_t>>();
  for (const auto& m : j.at("stored_latents")) o.stored_latents.push_back(matrix_from(m));
  for (const auto& w : j.at("history"))
    o.history.push_back({w[0].get<std::size_t>(), phase_from(w[1].get<std::string>()), w[2].get<double>(),
                         w[3].get<double>(), w[4].get<double>(), w[5].get<double>()});
  o.sampling_rw_rate = j.at("sampling_rw_rate").get<double>();
  o.sampling_mala_rate = j.at("sampling_mala_rate").get<double>();
  o.audit_max_diff = j.at("audit_max_diff").get<double>();
  o.final_state = snapshot_from(j.at("final_state"));
  return o;
}

std::string to_bytes(const json& j) {
  const auto v = json::to_cbor(j);
  return std::string(v.begin(), v.end());
}

json from_bytes(const std::string& bytes, const char* what) {
  try {
    return json::from_cbor(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": corrupt file: " + e.what());
  }
}

}  // namespace

std::string encode_checkpoint(const ChainSnapshot& snap, const ChainOutput& out, const std::string& run_hash) {
  return to_bytes({{"run_hash", run_hash}, {"snapshot", snapshot_json(snap)}, {"output", output_json(out)}});
}

std::pair<ChainSnapshot, ChainOutput> decode_checkpoint(const std::string& bytes, const std::string& run_hash) {
  const json j = from_bytes(bytes, "checkpoint");
  if (j.at("run_hash").get<std::string>() != run_hash)
    throw ValidationError("resume refused: checkpoint belongs to a run with a different manifest hash");
  return {snapshot_from(j.at("snapshot")), output_from(j.at("output"))};
}

std::string encode_fit(const FitResult& fit) {
  json chains = json::array();
  for (const auto& c : fit.chains) chains.push_back(output_json(c));
  return to_bytes({{"variant", fit.variant.name()},
                   {"names", fit.names},
                   {"predict_sites", fit.predict_sites},
                   {"site_ids", fit.site_ids},
                   {"time_ids", fit.time_ids},
                   {"chains", chains}});
}

FitResult decode_fit(const std::string& bytes) {
  const json j = from_bytes(bytes, "fit record");
  FitResult f;
  f.variant = ModelVariant::parse(j.at("variant").get<std::string>());
  f.names = j.at("names").get<std::vector<std::string>>();
  f.predict_sites = j.at("predict_sites").get<std::vector<std::size_t>>();
  f.site_ids = j.at("site_ids").get<std::vector<std::string>>();
  f.time_ids = j.at("time_ids").get<std::vector<std::string>>();
  for (const auto& c : j.at("chains")) f.chains.push_back(output_from(c));
  return f;
}

std::string trace_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "chain,iter";
  for (const auto& n : fit.names) os << ',' << n;
  os << '\n';
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& ch = fit.chains[c];
    for (std::size_t it = ch.thin - 1; it < ch.iterations_done(); it += ch.thin) {
      os << c << ',' << it + 1;
      for (std::size_t k = 0; k < ch.names.size(); ++k) os << ',' << format_double(ch.hyper(it, k));
      os << '\n';
    }
  }
  return os.str();
}

std::string latent_trace_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "chain,iter";
  if (!fit.chains.empty())
    for (const auto& [r, c] : fit.chains.front().traced_cells) os << ",lambda_" << r + 1 << '_' << c + 1;
  os << '\n';
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& ch = fit.chains[c];
    const std::size_t k = ch.traced_cells.size();
    for (std::size_t t = 0; t < ch.thinned_iters.size(); ++t) {
      os << c << ',' << ch.thinned_iters[t] + 1;
      for (std::size_t q = 0; q < k; ++q) os << ',' << format_double(std::exp(ch.latent_trace[t * k + q]));
      os << '\n';
    }
  }
  return os.str();
}

std::string history_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "chain,iter,phase,rw_rate,mala_rate,tau_theta,tau_lambda\n";
  for (std::size_t c = 0; c < fit.chains.size(); ++c)
    for (const auto& w : fit.chains[c].history)
      os << c << ',' << w.iter_end << ',' << phase_name(w.phase) << ',' << format_double(w.rw_rate) << ','
         << format_double(w.mala_rate) << ',' << format_double(w.tau_theta) << ',' << format_double(w.tau_lambda)
         << '\n';
  return os.str();
}

std::string summary_json(const FitResult& fit, const std::vector<ParamSummary>& rows) {
  json params = json::array();
  for (const auto& r : rows)
    params.push_back({{"name", r.name},
                      {"mean", r.mean},
                      {"lower", r.lower},
                      {"upper", r.upper},
                      {"ess", r.ess},
                      {"rhat", r.rhat},
                      {"draws", r.draws},
                      {"flagged", r.flagged}});
  json chains = json::array();
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& ch = fit.chains[c];
    chains.push_back({{"chain", c},
                      {"sampling_rw_rate", ch.sampling_rw_rate},
                      {"sampling_mala_rate", ch.sampling_mala_rate},
                      {"tau_theta", ch.final_state.tuning.tau_theta},
                      {"tau_lambda", ch.final_state.tuning.tau_lambda},
                      {"audit_max_diff", ch.audit_max_diff}});
  }
  json out{{"variant", fit.variant.name()}, {"parameters", params}, {"chains", chains}};
  return out.dump(2) + '\n';
}

std::string chi_csv(const ChiCurve& curve) {
  std::ostringstream os;
  os << "u,chi,se,n_mc\n";
  for (std::size_t k = 0; k < curve.u_grid.size(); ++k)
    os << format_double(curve.u_grid[k]) << ',' << format_double(curve.chi_hat[k]) << ','
       << format_double(curve.mc_se[k]) << ',' << curve.n_mc << '\n';
  return os.str();
}

std::string scores_csv(const std::vector<ScoreReport>& rows) {
  std::ostringstream os;
  os << "model,crps,twcrps,cells,best_crps,best_twcrps\n";
  for (const auto& r : rows)
    os << r.label << ',' << format_double(r.crps) << ',' << format_double(r.twcrps) << ',' << r.cells << ','
       << (r.best_crps ? 1 : 0) << ',' << (r.best_twcrps ? 1 : 0) << '\n';
  return os.str();
}

std::string predictive_csv(const PredictiveTable& table) {
  std::ostringstream os;
  os << "site_id,draw";
  for (const auto& t : table.time_ids) os << ',' << t;
  os << '\n';
  for (std::size_t k = 0; k < table.site_ids.size(); ++k) {
    const Matrix& m = table.draws[k];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << table.site_ids[k] << ',' << r;
      for (Eigen::Index i = 0; i < m.cols(); ++i) os << ',' << format_double(m(r, i));
      os << '\n';
    }
  }
  return os.str();
}

PredictiveTable read_predictive(const fs::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, header);
  if (header.size() < 3 || header[0] != "site_id" || header[1] != "draw")
    throw ValidationError(path.string() + ": header must be site_id,draw,<time ids>");
  PredictiveTable t;
  t.time_ids.assign(header.begin() + 2, header.end());
  std::vector<std::vector<std::vector<double>>> per_site;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto ctx = csv_context(path, r);
    if (t.site_ids.empty() || t.site_ids.back() != rows[r][0]) {
      if (std::find(t.site_ids.begin(), t.site_ids.end(), rows[r][0]) != t.site_ids.end())
        throw ValidationError(ctx + ": rows of site '" + rows[r][0] + "' are not contiguous");
      t.site_ids.push_back(rows[r][0]);
      per_site.emplace_back();
    }
    std::vector<double> v;
    for (std::size_t c = 2; c < rows[r].size(); ++c) v.push_back(parse_double(rows[r][c], ctx));
    per_site.back().push_back(std::move(v));
  }
  for (const auto& site : per_site) {
    Matrix m(static_cast<Eigen::Index>(site.size()), static_cast<Eigen::Index>(t.time_ids.size()));
    for (std::size_t r = 0; r < site.size(); ++r)
      for (std::size_t i = 0; i < site[r].size(); ++i)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = site[r][i];
    t.draws.push_back(std::move(m));
  }
  return t;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string events_csv(const EventExtraction& ex, const std::vector<std::string>& time_ids) {
  std::ostringstream os;
  os << "time_id,mean,observed,missing\n";
  for (const auto& e : ex.events)
    os << time_ids.at(e.time_index) << ',' << format_double(e.mean) << ',' << e.observed << ',' << e.missing << '\n';
  return os.str();
}

EventExtraction extract_events(const Matrix& y, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw ValidationError("extract_events: quantile must lie in (0, 1)");
  if (y.rows() == 0 || y.cols() == 0) throw ValidationError("extract_events: empty data");
  EventExtraction ex;
  ex.days = static_cast<std::size_t>(y.rows());
  std::vector<EventDay> days;
  std::vector<double> means;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    double sum = 0.0;
    std::size_t obs = 0, miss = 0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (std::isfinite(y(t, j))) {
        sum += y(t, j);
        ++obs;
      } else {
        ++miss;
      }
    }
    if (obs == 0) throw ValidationError("extract_events: day " + std::to_string(t) + " has no observed values");
    ex.missing_cells += miss;
    days.push_back({static_cast<std::size_t>(t), sum / static_cast<double>(obs), obs, miss});
    means.push_back(days.back().mean);
  }
  ex.threshold = empirical_quantile(means, quantile);
  for (const auto& d : days)
    if (d.mean > ex.threshold) ex.events.push_back(d);
  return ex;
}

}  // namespace ratemix::io

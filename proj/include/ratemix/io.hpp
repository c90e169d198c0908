#ifndef RATEMIX_IO_HPP
#define RATEMIX_IO_HPP

#include "ratemix/common.hpp"
#include "ratemix/diagnostics.hpp"
#include "ratemix/latent_field.hpp"
#include "ratemix/model.hpp"
#include "ratemix/sampler.hpp"
#include "ratemix/simulate.hpp"

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ratemix::io {

/// Shortest decimal that reads back to the same double; "inf"/"-inf"/"nan" otherwise.
std::string format_double(double v);
/// Accepts the above spellings; throws ValidationError with `context` on bad input.
double parse_double(const std::string& s, const std::string& context);

struct SiteTable {
  std::vector<std::string> ids;
  std::vector<Point> coords;
  Matrix covariates;  // d x p
  std::vector<std::string> covariate_names;
};

/// Header site_id,x,y[,covariates...].
SiteTable read_sites(const std::filesystem::path& path);
void write_sites(const std::filesystem::path& path, const SiteTable& sites);

/// Long-format observations: site_id,time_id,value[,censor]. An empty value is missing;
/// censor is a threshold, "inf" (fully censored) or 0 (uncensored).
struct LongData {
  std::vector<std::string> site_ids;  // column order, from the sites table
  std::vector<std::string> time_ids;  // row order, by first appearance
  Matrix y;                           // n x d, NaN where missing
  std::optional<Matrix> censor;       // n x d when the file has a censor column
};

LongData read_long_data(const std::filesystem::path& path, const SiteTable& sites);
void write_long_data(const std::filesystem::path& path, const LongData& data);

/// Thresholds for fitting: the censor column, with +inf forced wherever y is missing.
Matrix thresholds_from_censor(const LongData& data);
/// ExceedanceData with missing values mapped to fully censored cells.
ExceedanceData to_exceedance(const LongData& data, const Matrix& thresholds);

/// Flat INI configuration with sections per module.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config from_string(const std::string& text);
  static Config from_ptree(boost::property_tree::ptree tree);

  bool has(const std::string& key) const;
  /// Required key; throws ValidationError "missing config key 'section.key'".
  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::size_t get_size_or(const std::string& key, std::size_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  const boost::property_tree::ptree& tree() const { return tree_; }
  /// Canonical INI text (sections and keys sorted).
  std::string canonical() const;

 private:
  boost::property_tree::ptree tree_;
};

SamplerConfig sampler_from_config(const Config& c);
PriorConfig priors_from_config(const Config& c);
ScenarioSpec scenario_from_config(const Config& c);

/// Git-style object hash: SHA-1 of "blob <size>\0" followed by the bytes.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// Deterministic JSON run record: command, canonical config, seed, input hashes, versions.
std::string manifest_json(const std::string& command, const Config& config,
                          const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);
/// Canonical config embedded in a manifest written by manifest_json.
Config config_from_manifest(const std::filesystem::path& path);
std::string version_string();

/// Binary checkpoint of a chain (snapshot plus partial output).
std::string encode_checkpoint(const ChainSnapshot& snap, const ChainOutput& out, const std::string& run_hash);
std::pair<ChainSnapshot, ChainOutput> decode_checkpoint(const std::string& bytes, const std::string& run_hash);

/// Full fit record used by predict and score.
std::string encode_fit(const FitResult& fit);
FitResult decode_fit(const std::string& bytes);

std::string trace_csv(const FitResult& fit);
std::string latent_trace_csv(const FitResult& fit);
std::string history_csv(const FitResult& fit);
/// Rows per parameter with mean, 2.5%, 97.5%, ess, rhat; plus the final acceptance rates.
std::string summary_json(const FitResult& fit, const std::vector<ParamSummary>& rows);
std::string chi_csv(const ChiCurve& curve);
std::string scores_csv(const std::vector<ScoreReport>& rows);

/// Predictive draws per site: draws[k] is (draws x time points) for site_ids[k].
struct PredictiveTable {
  std::vector<std::string> site_ids;
  std::vector<std::string> time_ids;
  std::vector<Matrix> draws;
};

/// Header site_id,draw,<time ids...>; one row per site and draw.
std::string predictive_csv(const PredictiveTable& table);
PredictiveTable read_predictive(const std::filesystem::path& path);

/// Splits on `sep` and trims blanks; empty items are dropped.
std::vector<std::string> split_list(const std::string& text, char sep = ',');

struct EventDay {
  std::size_t time_index;
  double mean;
  std::size_t observed;
  std::size_t missing;
};

struct EventExtraction {
  double threshold;  // empirical quantile of the daily spatial means
  std::vector<EventDay> events;
  std::size_t days = 0;
  std::size_t missing_cells = 0;
};

/// Days whose cross-site mean (missing cells excluded) is strictly above the empirical
/// quantile of all daily means. Throws ValidationError on an all-missing day.
EventExtraction extract_events(const Matrix& y, double quantile);
std::string events_csv(const EventExtraction& ex, const std::vector<std::string>& time_ids);

}  // namespace ratemix::io

#endif

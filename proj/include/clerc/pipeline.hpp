#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clerc {

/// Settings shared by all subcommands. Read from a key = value file; flags
/// given on the command line override file values.
struct PipelineConfig {
  std::size_t chunk_window = 350;
  std::size_t chunk_stride = 175;
  std::size_t query_window = 300;
  std::string view = "single-removed";  // single-removed | all-removed
  std::string kind = "all";             // direct | indirect | all
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  std::size_t ngram_n = 5;
  std::uint64_t seed = 13;
  std::size_t salient_k = 2;
  std::size_t word_budget = 6000;
  std::size_t k = 1000;
  /// Passage depth searched before MaxP aggregation.
  std::size_t maxp_depth = 10000;
  std::size_t shards = 1;
  std::size_t threads = 1;
  std::size_t quote_pairing_window = 300;
  bool include_references_in_substring_check = false;
  bool micro_average = false;
  std::string reporters;  // optional reporter table path

  /// Throws ConfigError naming the key on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Cross-field checks (stride <= window).
  void validate() const;

  /// Lines "key = value"; '#' starts a comment. Throws ConfigError.
  static PipelineConfig parse(std::istream& in);
  static PipelineConfig from_file(const std::string& path);

  static const std::vector<std::string>& keys();
  /// Every key with its current value, in keys() order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// SHA-256 of entries(), excluding `threads` (which never affects output).
  std::string hash() const;
};

std::string sha256_hex(std::string_view data);
/// Throws DataError when the file cannot be read.
std::string sha256_file(const std::string& path);

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on usage or configuration errors, 2 on data errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace clerc

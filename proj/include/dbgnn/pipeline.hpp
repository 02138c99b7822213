#pragma once

#include <dbgnn/experiment.hpp>
#include <dbgnn/order_selection.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dbgnn {

using KeyValues = std::map<std::string, std::string>;

/// Settings of an end-to-end run. Keys of the flat configuration format are
/// the option names, e.g. `max-order = 2`.
struct PipelineConfig {
    std::string input;   // edge list; empty when a generator is used
    std::string labels;  // `node,label` CSV
    std::string generator;  // "" or "temp-clusters"
    std::size_t gen_n = 30;
    std::size_t gen_m = 560;
    std::size_t gen_pairs = 30000;

    bool directed = true;
    Timestamp bin_width = 1;
    bool dedup = false;
    Timestamp delta = 1;
    std::size_t max_order = 2;
    double alpha = kDefaultAlpha;
    std::optional<std::size_t> order;  // overrides the selected order

    std::vector<std::string> methods{"dbgnn", "gcn"};
    ModelConfig model;
    TrainConfig train;
    std::string output_dir = "dbgnn-out";
    std::size_t threads = 1;
};

/// All recognised configuration keys.
const std::vector<std::string>& config_keys();

/// `key = value` lines; `#` starts a comment. Unknown keys are rejected.
KeyValues parse_config(std::istream& in);
KeyValues read_config(const std::string& path);

/// Shipped presets: temp-clusters, workplace, hospital, high-school-2011,
/// high-school-2012, student-sms.
KeyValues preset(const std::string& name);
std::vector<std::string> preset_names();

/// Variables named DBGNN_<KEY> with the key upper-cased and '-' as '_'.
KeyValues environment_overrides(char** envp);

/// Applies the key-value pairs on top of `config`.
void apply_config(PipelineConfig& config, const KeyValues& values);

/// Entry point of the command-line tool; returns the process exit code
/// (0 ok, 1 usage, 2 data error, 3 numeric failure).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, char** envp = nullptr);

}  // namespace dbgnn

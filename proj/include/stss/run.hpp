#pragma once

// Batch driver behind the `stss` executable. Configuration is a flat
// key=value map: a config file is read first, command-line flags override it,
// and the resolved values are echoed to <out>/config.txt in the same format.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stss/motion.hpp"
#include "stss/pde.hpp"
#include "stss/segment.hpp"

namespace stss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitValidation = 4;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { intensity, motion, validate };
enum class Init { tiles, kmeans, mask_file };

using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
    Mode mode = Mode::intensity;
    std::string input;
    std::string input2;      // motion: frame after `input`
    std::string input_prev;  // motion: frame before `input`, optional
    int n_regions = 2;
    Init init = Init::kmeans;
    std::string init_mask;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string trace;  // empty: <out>/trace.csv
    std::string flow;
    std::string occlusion;
    std::string occlusion_prev;
    motion::WarpKind warp = motion::WarpKind::translation;
    double rho_threshold = 0.2;
    SolverConfig solver;
    DescentConfig descent;

    /// Throws ConfigError on unknown keys or unparsable values.
    static RunConfig from_key_values(const KeyValues& kv);
    KeyValues to_key_values() const;
    /// Throws ConfigError.
    void validate() const;
};

/// Keys accepted in config files, in echo order.
const std::vector<std::string>& config_keys();

/// Lines of key=value; blank lines and lines starting with '#' are skipped.
/// Throws InputError when the file cannot be read, ConfigError on bad lines.
KeyValues read_config_file(const std::string& path);
void write_config_file(const std::string& path, const RunConfig& cfg);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Runs one job and returns the exit status; messages go to `log`.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace stss::cli

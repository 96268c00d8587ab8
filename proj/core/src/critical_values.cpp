#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "wasgd/error.hpp"
#include "wasgd/inference.hpp"
#include "wasgd/parallel.hpp"
#include "wasgd/rng.hpp"
#include "wasgd/stats.hpp"

namespace wasgd {

namespace {

constexpr std::size_t kPathsPerChunk = 4096;
constexpr double kLevelTolerance = 1e-9;

// Accumulates the pivot of one path increment by increment.
class PivotAccumulator {
  public:
    explicit PivotAccumulator(std::size_t grid) : grid_(static_cast<double>(grid)), scale_(1.0 / std::sqrt(grid_)) {}

    void add(double z) {
        w_ += z * scale_;
        ++k_;
        sum_w2_ += w_ * w_;
        sum_kw_ += k_ * w_;
        sum_k2_ += k_ * k_;
    }

    double pivot() const {
        // sum_k (W_k - (k/m) W_m)^2 expanded around the final W_m.
        const double slope = w_ / grid_;
        const double squares = sum_w2_ - 2.0 * slope * sum_kw_ + slope * slope * sum_k2_;
        return w_ / std::sqrt(std::max(squares, 0.0) / grid_);
    }

  private:
    double grid_;
    double scale_;
    double w_ = 0.0;
    double k_ = 0.0;
    double sum_w2_ = 0.0;
    double sum_kw_ = 0.0;
    double sum_k2_ = 0.0;
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

double CriticalValueTable::quantile_for(double p) const {
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (std::abs(levels[k] - p) <= kLevelTolerance) return quantiles[k];
    }
    std::ostringstream os;
    os << "critical-value table" << (source.empty() ? "" : " " + source) << " has no entry for percentile " << p;
    throw LevelNotTabulated(os.str());
}

void CriticalValueTable::validate() const {
    if (levels.empty() || levels.size() != quantiles.size()) throw ConfigError("critical-value table is empty or ragged");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0.5 && levels[k] < 1.0)) throw ConfigError("critical-value levels must lie in (0.5, 1)");
        if (k > 0 && !(levels[k] > levels[k - 1] && quantiles[k] > quantiles[k - 1])) {
            throw ConfigError("critical values must increase strictly with the level");
        }
    }
}

void CriticalValueTable::write_csv(std::ostream& out) const {
    out << "level,quantile,grid,paths,seed\n";
    for (std::size_t k = 0; k < levels.size(); ++k) {
        out << std::setprecision(12) << levels[k] << ',' << quantiles[k] << ',' << grid << ',' << paths << ','
            << seed << '\n';
    }
}

CriticalValueTable CriticalValueTable::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open critical-value table '" + path + "'");
    CriticalValueTable table;
    table.source = path;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "level,quantile,grid,paths,seed") {
                throw ConfigError("critical-value table '" + path + "' has an unexpected header");
            }
            header = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 5) throw ConfigError("malformed row in critical-value table: " + line);
        try {
            table.levels.push_back(std::stod(fields[0]));
            table.quantiles.push_back(std::stod(fields[1]));
            const auto grid = static_cast<std::size_t>(std::stoull(fields[2]));
            const auto paths = static_cast<std::size_t>(std::stoull(fields[3]));
            const auto seed = static_cast<std::uint64_t>(std::stoull(fields[4]));
            if (table.levels.size() > 1 && (grid != table.grid || paths != table.paths || seed != table.seed)) {
                throw ConfigError("critical-value table mixes simulation settings");
            }
            table.grid = grid;
            table.paths = paths;
            table.seed = seed;
        } catch (const std::logic_error&) {
            throw ConfigError("malformed row in critical-value table: " + line);
        }
    }
    table.validate();
    return table;
}

std::vector<double> default_critical_levels() { return {0.9, 0.95, 0.975, 0.99, 0.995}; }

std::string default_critical_values_path() {
    if (const char* env = std::getenv("WASGD_CRITICAL_VALUES"); env != nullptr && *env != '\0') return env;
    for (const char* candidate : {WASGD_SOURCE_CRITICAL_VALUES, WASGD_INSTALL_CRITICAL_VALUES}) {
        std::error_code ec;
        if (std::filesystem::exists(candidate, ec)) return candidate;
    }
    return {};
}

double rs_pivot(std::span<const double> increments) {
    if (increments.empty()) throw ConfigError("a pivot needs at least one increment");
    PivotAccumulator acc(increments.size());
    for (double z : increments) acc.add(z);
    return acc.pivot();
}

std::vector<double> simulate_pivots(std::size_t grid, std::size_t paths, std::uint64_t seed, std::size_t workers) {
    if (grid < 2 || paths < 1) throw ConfigError("pivot simulation needs grid >= 2 and paths >= 1");
    std::vector<double> pivots(paths);
    const std::size_t chunks = (paths + kPathsPerChunk - 1) / kPathsPerChunk;
    const std::size_t threads = resolve_workers(workers);
    ordered_map_reduce(
        chunks, threads,
        [&](std::size_t chunk) {
            RngStream rng(seed, chunk);
            const std::size_t begin = chunk * kPathsPerChunk;
            const std::size_t end = std::min(paths, begin + kPathsPerChunk);
            std::vector<double> out;
            out.reserve(end - begin);
            std::vector<double> increments(grid);
            for (std::size_t p = begin; p < end; ++p) {
                rng.fill_normal(increments);
                out.push_back(rs_pivot(increments));
            }
            return out;
        },
        [&](std::size_t chunk, std::vector<double> out) {
            std::copy(out.begin(), out.end(), pivots.begin() + static_cast<std::ptrdiff_t>(chunk * kPathsPerChunk));
        },
        2 * threads);
    return pivots;
}

CriticalValueTable critical_values_from_pivots(std::vector<double> pivots, std::span<const double> levels,
                                               std::size_t grid, std::uint64_t seed) {
    if (pivots.empty()) throw ConfigError("no pivots to tabulate");
    for (double& p : pivots) p = std::abs(p);
    std::sort(pivots.begin(), pivots.end());
    CriticalValueTable table;
    table.grid = grid;
    table.paths = pivots.size();
    table.seed = seed;
    for (double level : levels) {
        table.levels.push_back(level);
        table.quantiles.push_back(empirical_quantile(pivots, 2.0 * level - 1.0));
    }
    table.validate();
    return table;
}

CriticalValueTable simulate_critical_values(std::size_t grid, std::size_t paths, std::span<const double> levels,
                                            std::uint64_t seed, std::size_t workers) {
    if (grid < 1000) throw ConfigError("critical values need grid >= 1000");
    if (paths < 100000) throw ConfigError("critical values need paths >= 100000");
    return critical_values_from_pivots(simulate_pivots(grid, paths, seed, workers), levels, grid, seed);
}

}  // namespace wasgd

#pragma once

#include "oracles.hpp"

#include <popsyn/random.hpp>
#include <popsyn/tabular.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("popsyn-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const fs::path &path() const noexcept { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

  private:
    fs::path path_;
};

inline std::string read_file(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Relative path -> file contents for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const fs::path &root) {
    std::map<std::string, std::string> files;
    for (const auto &entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files[fs::relative(entry.path(), root).generic_string()] = read_file(entry.path());
        }
    }
    return files;
}

/// Rows of categorical data with the given labels (levels named "0", "1", ...).
inline popsyn::RecordTable make_table(const std::vector<std::string> &labels,
                                      const std::vector<int> &cardinality,
                                      const std::vector<std::vector<int>> &rows) {
    return oracle::to_table(oracle::Data{cardinality, rows}, labels);
}

/// Uniform random categorical rows.
inline oracle::Data random_data(const std::vector<int> &cardinality, std::size_t rows,
                                std::uint64_t seed) {
    popsyn::SplitMix64 rng{seed};
    oracle::Data d{cardinality, {}};
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<int> row;
        for (int c : cardinality) {
            row.push_back(static_cast<int>(popsyn::uniform01(rng) * c));
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

/// A -> B -> C where each child copies its parent with probability `keep`
/// and otherwise takes one of the other levels uniformly.
inline oracle::Data chain_data(std::size_t rows, double keep, std::uint64_t seed,
                               int cardinality = 2) {
    popsyn::SplitMix64 rng{seed};
    oracle::Data d{{cardinality, cardinality, cardinality}, {}};
    auto level = [&](double u) { return static_cast<int>(u * cardinality); };
    auto child = [&](int parent) {
        if (popsyn::uniform01(rng) < keep) {
            return parent;
        }
        const int other = static_cast<int>(popsyn::uniform01(rng) * (cardinality - 1));
        return other < parent ? other : other + 1;
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const int a = level(popsyn::uniform01(rng));
        const int b = child(a);
        const int c = child(b);
        d.rows.push_back({a, b, c});
    }
    return d;
}

/// Data sampled forward from random parent sets: each child copies a random
/// parent with probability 0.75, otherwise draws uniformly.
inline oracle::Data dag_data(const oracle::ParentSets &parents, const std::vector<int> &cardinality,
                             std::size_t rows, std::uint64_t seed) {
    popsyn::SplitMix64 rng{seed};
    oracle::Data d{cardinality, {}};
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<int> row(cardinality.size(), -1);
        // Nodes are visited repeatedly until every parent is set; parents are acyclic.
        for (std::size_t done = 0; done < cardinality.size();) {
            for (std::size_t v = 0; v < cardinality.size(); ++v) {
                if (row[v] >= 0) {
                    continue;
                }
                bool ready = true;
                for (int p : parents[v]) {
                    ready = ready && row[p] >= 0;
                }
                if (!ready) {
                    continue;
                }
                const int uniform = static_cast<int>(popsyn::uniform01(rng) * cardinality[v]);
                if (!parents[v].empty() && popsyn::uniform01(rng) < 0.75) {
                    const auto pick = static_cast<std::size_t>(popsyn::uniform01(rng) *
                                                               static_cast<double>(parents[v].size()));
                    row[v] = row[parents[v][pick]] % cardinality[v];
                } else {
                    row[v] = uniform;
                }
                ++done;
            }
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

inline std::vector<std::string> letters(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.emplace_back(1, static_cast<char>('A' + i));
    }
    return out;
}

inline std::vector<std::string> numbered(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) {
        out.push_back(std::to_string(i));
    }
    return out;
}

struct SchemaPair {
    popsyn::Schema household;
    popsyn::Schema person;
};

/// Selected attributes outside the city: 3 household and 9 person attributes.
inline SchemaPair regional_schemas() {
    using popsyn::AttributeSpec;
    using A = popsyn::AttributeLevel;
    return {
        popsyn::Schema{{
            AttributeSpec::categorical("PUMA", numbered(90), A::household, true),
            AttributeSpec::categorical("HINCP", numbered(9), A::household),
            AttributeSpec::categorical("VEH", numbered(4), A::household),
        }},
        popsyn::Schema{{
            AttributeSpec::categorical("AGEP", numbered(7), A::person, true),
            AttributeSpec::categorical("ENG", numbered(5), A::person),
            AttributeSpec::continuous("JWMNP", {0, 15, 30, 45, 60, 90, 140}, A::person),
            AttributeSpec::categorical("JWTRNS", numbered(13), A::person),
            AttributeSpec::categorical("SCH", numbered(3), A::person),
            AttributeSpec::categorical("SEX", numbered(2), A::person),
            AttributeSpec::categorical("DIS", numbered(2), A::person),
            AttributeSpec::categorical("NAICSP", numbered(20), A::person),
            AttributeSpec::categorical("RACWHT", numbered(2), A::person, true),
        }},
    };
}

/// Selected attributes inside the city: 3 household and 6 person attributes.
inline SchemaPair city_schemas() {
    using popsyn::AttributeSpec;
    using A = popsyn::AttributeLevel;
    return {
        popsyn::Schema{{
            AttributeSpec::categorical("CT", numbered(2313), A::household, true),
            AttributeSpec::categorical("HINCP", numbered(9), A::household),
            AttributeSpec::categorical("VEH", numbered(4), A::household),
        }},
        popsyn::Schema{{
            AttributeSpec::categorical("AGEP", numbered(7), A::person, true),
            AttributeSpec::categorical("ENG", numbered(5), A::person),
            AttributeSpec::categorical("SEX", numbered(2), A::person),
            AttributeSpec::categorical("DIS", numbered(2), A::person),
            AttributeSpec::categorical("NAICSP", numbered(2), A::person),
            AttributeSpec::categorical("RACWHT", numbered(2), A::person, true),
        }},
    };
}

} // namespace testing_support

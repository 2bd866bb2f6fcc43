#include "popsyn/tabular.hpp"

#include "popsyn/error.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace popsyn {

std::string_view to_string(AttributeLevel level) {
    return level == AttributeLevel::household ? "household" : "person";
}

AttributeLevel attribute_level_from_string(std::string_view text) {
    if (text == "household") {
        return AttributeLevel::household;
    }
    if (text == "person") {
        return AttributeLevel::person;
    }
    throw SchemaError(fmt::format("unknown attribute level '{}'", text));
}

namespace {

std::string format_edge(double v) {
    // Shortest representation; integral edges print without a decimal point.
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        return fmt::format("{}", static_cast<long long>(v));
    }
    return fmt::format("{}", v);
}

} // namespace

AttributeSpec AttributeSpec::categorical(std::string label, std::vector<std::string> levels,
                                         AttributeLevel level, bool is_conditional) {
    if (label.empty()) {
        throw SchemaError("attribute label must be non-empty");
    }
    if (levels.empty()) {
        throw SchemaError(fmt::format("attribute '{}' declares no levels", label));
    }
    std::set<std::string_view> seen;
    for (const auto &name : levels) {
        if (name.empty()) {
            throw SchemaError(fmt::format("attribute '{}' has an empty level name", label));
        }
        if (!seen.insert(name).second) {
            throw SchemaError(fmt::format("attribute '{}' repeats level '{}'", label, name));
        }
    }
    AttributeSpec spec;
    spec.label_ = std::move(label);
    spec.level_ = level;
    spec.is_conditional_ = is_conditional;
    spec.names_ = std::move(levels);
    return spec;
}

AttributeSpec AttributeSpec::continuous(std::string label, std::vector<double> bin_edges,
                                        AttributeLevel level, bool is_conditional) {
    if (label.empty()) {
        throw SchemaError("attribute label must be non-empty");
    }
    if (bin_edges.size() < 2) {
        throw SchemaError(fmt::format("attribute '{}' needs at least two bin edges", label));
    }
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
        if (!(bin_edges[i - 1] < bin_edges[i])) {
            throw SchemaError(
                fmt::format("attribute '{}' bin edges must be strictly increasing", label));
        }
    }
    AttributeSpec spec;
    spec.label_ = std::move(label);
    spec.level_ = level;
    spec.is_conditional_ = is_conditional;
    for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) {
        spec.names_.push_back(format_edge(bin_edges[i]) + "-" + format_edge(bin_edges[i + 1]));
    }
    spec.binning_ = ContinuousBinning{bin_edges.front(), bin_edges.back(), std::move(bin_edges)};
    return spec;
}

const std::string &AttributeSpec::level_name(Level level) const {
    if (level >= names_.size()) {
        throw LevelError(fmt::format("level index {} out of range for '{}'", level, label_));
    }
    return names_[level];
}

std::optional<Level> AttributeSpec::find_level(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return static_cast<Level>(it - names_.begin());
}

Level AttributeSpec::parse_cell(std::string_view text) const {
    if (auto found = find_level(text)) {
        return *found;
    }
    if (binning_) {
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc{} && ptr == text.data() + text.size()) {
            return bin_continuous(value, *this);
        }
    }
    throw LevelError(fmt::format("'{}' is not a level of attribute '{}'", text, label_));
}

AttributeSpec AttributeSpec::renamed(std::string label) const {
    AttributeSpec copy = *this;
    copy.label_ = std::move(label);
    return copy;
}

AttributeSpec AttributeSpec::with_conditional(bool is_conditional) const {
    AttributeSpec copy = *this;
    copy.is_conditional_ = is_conditional;
    return copy;
}

Level bin_continuous(double value, const AttributeSpec &spec) {
    const ContinuousBinning *binning = spec.binning();
    if (binning == nullptr) {
        throw ArgumentError(fmt::format("attribute '{}' is not continuous", spec.label()));
    }
    if (!(value >= binning->min && value <= binning->max)) {
        throw RangeError(fmt::format("value {} outside [{}, {}] for attribute '{}'", value,
                                     binning->min, binning->max, spec.label()));
    }
    const auto &edges = binning->bin_edges;
    auto it = std::upper_bound(edges.begin(), edges.end(), value);
    auto bin = static_cast<std::size_t>(it - edges.begin());
    // upper_bound lands one past the containing bin's lower edge.
    return static_cast<Level>(std::min(bin, edges.size() - 1) - 1);
}

Schema::Schema(std::vector<AttributeSpec> attributes) : attributes_{std::move(attributes)} {
    std::set<std::string_view> seen;
    for (const auto &a : attributes_) {
        if (!seen.insert(a.label()).second) {
            throw SchemaError(fmt::format("duplicate attribute label '{}'", a.label()));
        }
    }
}

const AttributeSpec &Schema::at(std::string_view label) const {
    return attributes_[index_of(label)];
}

std::optional<std::size_t> Schema::find(std::string_view label) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        if (attributes_[i].label() == label) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t Schema::index_of(std::string_view label) const {
    if (auto i = find(label)) {
        return *i;
    }
    throw SchemaError(fmt::format("unknown attribute '{}'", label));
}

std::vector<std::size_t> Schema::indices_of(std::span<const std::string> labels) const {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto &l : labels) {
        out.push_back(index_of(l));
    }
    return out;
}

std::vector<std::string> Schema::labels() const {
    std::vector<std::string> out;
    out.reserve(attributes_.size());
    for (const auto &a : attributes_) {
        out.push_back(a.label());
    }
    return out;
}

Schema Schema::select(AttributeLevel level) const {
    std::vector<AttributeSpec> out;
    for (const auto &a : attributes_) {
        if (a.level() == level) {
            out.push_back(a);
        }
    }
    return Schema{std::move(out)};
}

Schema Schema::select(std::span<const std::string> labels) const {
    std::vector<AttributeSpec> out;
    for (const auto &l : labels) {
        out.push_back(at(l));
    }
    return Schema{std::move(out)};
}

RecordTable::RecordTable(Schema schema) : schema_{std::move(schema)} {}

void RecordTable::add_row(std::span<const Level> row) {
    if (row.size() != cols()) {
        throw SchemaError(fmt::format("row has {} cells, schema has {}", row.size(), cols()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] >= schema_[c].cardinality()) {
            throw LevelError(fmt::format("level index {} out of range for '{}'", row[c],
                                         schema_[c].label()));
        }
    }
    cells_.insert(cells_.end(), row.begin(), row.end());
    ++rows_;
}

RecordTable RecordTable::subset(std::span<const std::size_t> rows) const {
    RecordTable out{schema_};
    out.cells_.reserve(rows.size() * cols());
    for (std::size_t r : rows) {
        auto src = row(r);
        out.cells_.insert(out.cells_.end(), src.begin(), src.end());
    }
    out.rows_ = rows.size();
    return out;
}

RecordTable RecordTable::select(std::span<const std::string> labels) const {
    auto idx = schema_.indices_of(labels);
    RecordTable out{schema_.select(labels)};
    out.cells_.reserve(rows_ * idx.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c : idx) {
            out.cells_.push_back(at(r, c));
        }
    }
    out.rows_ = rows_;
    return out;
}

ContingencyTable::ContingencyTable(std::vector<std::string> axes) : axes_{std::move(axes)} {}

void ContingencyTable::add(const CellKey &key, double count) {
    if (key.size() != axes_.size()) {
        throw ArgumentError(
            fmt::format("cell arity {} does not match {} axes", key.size(), axes_.size()));
    }
    if (count < 0.0) {
        throw ArgumentError("contingency counts must be non-negative");
    }
    cells_[key] += count;
}

void ContingencyTable::set(const CellKey &key, double count) {
    if (key.size() != axes_.size()) {
        throw ArgumentError(
            fmt::format("cell arity {} does not match {} axes", key.size(), axes_.size()));
    }
    if (count < 0.0) {
        throw ArgumentError("contingency counts must be non-negative");
    }
    cells_[key] = count;
}

double ContingencyTable::count(const CellKey &key) const {
    auto it = cells_.find(key);
    return it == cells_.end() ? 0.0 : it->second;
}

double ContingencyTable::total() const {
    double sum = 0.0;
    for (const auto &[key, c] : cells_) {
        sum += c;
    }
    return sum;
}

DistributionVector::DistributionVector(std::vector<std::string> axes,
                                       std::map<CellKey, double> cells)
    : axes_{std::move(axes)}, cells_{std::move(cells)} {
    double sum = 0.0;
    for (const auto &[key, p] : cells_) {
        if (key.size() != axes_.size()) {
            throw ArgumentError("distribution cell arity does not match its axes");
        }
        if (!(p >= 0.0)) {
            throw ArgumentError("distribution proportions must be non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ArgumentError(fmt::format("distribution sums to {}, expected 1", sum));
    }
}

double DistributionVector::proportion(const CellKey &key) const {
    auto it = cells_.find(key);
    return it == cells_.end() ? 0.0 : it->second;
}

std::vector<std::size_t> axis_positions(std::span<const std::string> axes,
                                        std::span<const std::string> subset) {
    if (subset.empty()) {
        throw ArgumentError("projection needs at least one axis");
    }
    std::vector<std::size_t> pos;
    pos.reserve(subset.size());
    for (const auto &label : subset) {
        auto it = std::find(axes.begin(), axes.end(), label);
        if (it == axes.end()) {
            throw SchemaError(fmt::format("axis '{}' not in [{}]", label, fmt::join(axes, ", ")));
        }
        pos.push_back(static_cast<std::size_t>(it - axes.begin()));
    }
    return pos;
}

ContingencyTable tabulate(const RecordTable &records, std::span<const std::string> axes) {
    auto cols = records.schema().indices_of(axes);
    ContingencyTable table{std::vector<std::string>(axes.begin(), axes.end())};
    auto &cells = table.mutable_cells();
    CellKey key(cols.size());
    for (std::size_t r = 0; r < records.rows(); ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            key[i] = records.at(r, cols[i]);
        }
        cells[key] += 1.0;
    }
    return table;
}

DistributionVector normalize(const ContingencyTable &table) {
    const double total = table.total();
    if (!(total > 0.0)) {
        throw EmptyTableError("cannot normalize a table with zero total");
    }
    std::map<CellKey, double> cells;
    for (const auto &[key, c] : table.cells()) {
        cells.emplace_hint(cells.end(), key, c / total);
    }
    return DistributionVector{table.axes(), std::move(cells)};
}

namespace {

template <class Map>
Map project_cells(const Map &cells, const std::vector<std::size_t> &pos) {
    Map out;
    CellKey key(pos.size());
    for (const auto &[full, value] : cells) {
        for (std::size_t i = 0; i < pos.size(); ++i) {
            key[i] = full[pos[i]];
        }
        out[key] += value;
    }
    return out;
}

} // namespace

DistributionVector project(const DistributionVector &dist, std::span<const std::string> axes) {
    auto pos = axis_positions(dist.axes(), axes);
    return DistributionVector{std::vector<std::string>(axes.begin(), axes.end()),
                              project_cells(dist.cells(), pos)};
}

ContingencyTable project(const ContingencyTable &table, std::span<const std::string> axes) {
    auto pos = axis_positions(table.axes(), axes);
    ContingencyTable out{std::vector<std::string>(axes.begin(), axes.end())};
    out.mutable_cells() = project_cells(table.cells(), pos);
    return out;
}

} // namespace popsyn

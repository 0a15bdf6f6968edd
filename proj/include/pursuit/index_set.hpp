#pragma once

#include <algorithm>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "pursuit/errors.hpp"

namespace pursuit {

// Strictly increasing set of 1-based column indices. All public interfaces in
// this library speak 1-based indices; conversion to Eigen's 0-based columns
// happens at the point of use.
class IndexSet {
public:
    IndexSet() = default;

    IndexSet(std::initializer_list<int> indices)
        : IndexSet(std::vector<int>(indices)) {}

    // Accepts any order, sorts, and rejects duplicates and nonpositive values.
    explicit IndexSet(std::vector<int> indices) : indices_(std::move(indices)) {
        std::sort(indices_.begin(), indices_.end());
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] < 1)
                throw input_domain_error("IndexSet: indices are 1-based, got " +
                                         std::to_string(indices_[i]));
            if (i > 0 && indices_[i] == indices_[i - 1])
                throw input_domain_error("IndexSet: duplicate index " +
                                         std::to_string(indices_[i]));
        }
    }

    int size() const { return static_cast<int>(indices_.size()); }
    bool empty() const { return indices_.empty(); }

    // i-th smallest member, 0-based position.
    int operator[](int pos) const { return indices_[static_cast<std::size_t>(pos)]; }

    bool contains(int index) const {
        return std::binary_search(indices_.begin(), indices_.end(), index);
    }

    // Largest member, 0 when empty. Used for bounds checks against n.
    int max_index() const { return indices_.empty() ? 0 : indices_.back(); }

    void insert(int index) {
        if (index < 1)
            throw input_domain_error("IndexSet::insert: indices are 1-based");
        auto pos = std::lower_bound(indices_.begin(), indices_.end(), index);
        if (pos != indices_.end() && *pos == index)
            throw input_domain_error("IndexSet::insert: index " + std::to_string(index) +
                                     " already present");
        indices_.insert(pos, index);
    }

    // Members of this set that are not in other.
    IndexSet difference(const IndexSet& other) const {
        IndexSet out;
        std::set_difference(indices_.begin(), indices_.end(),
                            other.indices_.begin(), other.indices_.end(),
                            std::back_inserter(out.indices_));
        return out;
    }

    IndexSet set_union(const IndexSet& other) const {
        IndexSet out;
        std::set_union(indices_.begin(), indices_.end(),
                       other.indices_.begin(), other.indices_.end(),
                       std::back_inserter(out.indices_));
        return out;
    }

    IndexSet intersect(const IndexSet& other) const {
        IndexSet out;
        std::set_intersection(indices_.begin(), indices_.end(),
                              other.indices_.begin(), other.indices_.end(),
                              std::back_inserter(out.indices_));
        return out;
    }

    // {1..n} \ this. Throws if any member exceeds n.
    IndexSet complement(int n) const {
        if (max_index() > n)
            throw input_domain_error("IndexSet::complement: member exceeds ground set size");
        IndexSet out;
        out.indices_.reserve(static_cast<std::size_t>(n) - indices_.size());
        auto it = indices_.begin();
        for (int i = 1; i <= n; ++i) {
            if (it != indices_.end() && *it == i) { ++it; continue; }
            out.indices_.push_back(i);
        }
        return out;
    }

    bool operator==(const IndexSet& other) const = default;

    const std::vector<int>& values() const { return indices_; }
    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

    // Space-separated, e.g. "1 4 7". Empty set renders as "-".
    std::string to_string() const {
        if (indices_.empty()) return "-";
        std::ostringstream os;
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (i) os << ' ';
            os << indices_[i];
        }
        return os.str();
    }

private:
    std::vector<int> indices_;
};

} // namespace pursuit

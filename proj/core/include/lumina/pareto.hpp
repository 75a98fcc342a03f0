// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lumina/design_space.hpp"

namespace lumina {

/// (ttft_n, tpot_n, area_n); every component is minimized.
struct ObjectiveVector {
    std::array<double, 3> v{};

    double operator[](std::size_t i) const { return v[i]; }
    double& operator[](std::size_t i) { return v[i]; }
    bool operator==(const ObjectiveVector&) const = default;

    static ObjectiveVector unit() { return {{1.0, 1.0, 1.0}}; }
};

/// a <= b componentwise with at least one strict improvement.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// a < b in every component ("better than the reference in all objectives").
bool strictly_better(const ObjectiveVector& a, const ObjectiveVector& b);

/// Lebesgue measure of the union of boxes [p, ref]. Points not strictly below
/// ref in every coordinate contribute nothing. Exact, by a z-sweep over a 2D
/// staircase.
double hypervolume(std::span<const ObjectiveVector> front, const ObjectiveVector& ref);

/// Fraction of samples strictly better than ref in every objective; duplicates
/// count once per evaluation. Empty input yields 0.
double sample_efficiency(std::span<const ObjectiveVector> samples, const ObjectiveVector& ref);

/// Non-dominated sorting: rank 0 is the first front.
std::vector<int> non_dominated_ranks(std::span<const ObjectiveVector> points);

/// Crowding distance within one front (indices into points). Boundary points get +inf.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> points, std::span<const std::size_t> front);

struct ArchiveEntry {
    DesignPoint design;
    ObjectiveVector objectives;
};

/// Running non-dominated set, deduplicated by design.
class ParetoArchive {
public:
    explicit ParetoArchive(ObjectiveVector reference = ObjectiveVector::unit()) : reference_(reference) {}

    /// Adds the point unless an entry dominates it or holds the same design;
    /// evicts entries it dominates.
    /// Returns whether the point was added.
    bool insert(const DesignPoint& design, const ObjectiveVector& obj);

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const ObjectiveVector& reference() const { return reference_; }

    std::vector<ObjectiveVector> objectives() const;
    double hypervolume() const;

private:
    ObjectiveVector reference_;
    std::vector<ArchiveEntry> entries_;
};

}  // namespace lumina

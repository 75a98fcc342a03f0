// SPDX-License-Identifier: Apache-2.0
#include "lumina/pareto.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace lumina {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    bool strict = false;
    for (std::size_t i = 0; i < 3; ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

bool strictly_better(const ObjectiveVector& a, const ObjectiveVector& b) {
    return a[0] < b[0] && a[1] < b[1] && a[2] < b[2];
}

namespace {

// Non-dominated 2D staircase: x ascending, y strictly descending.
class Staircase {
public:
    void insert(double x, double y) {
        auto it = steps_.upper_bound(x);
        if (it != steps_.begin() && std::prev(it)->second <= y) return;
        it = steps_.lower_bound(x);
        while (it != steps_.end() && it->second >= y) it = steps_.erase(it);
        steps_[x] = y;
    }

    double area(double ref_x, double ref_y) const {
        double total = 0.0;
        for (auto it = steps_.begin(); it != steps_.end(); ++it) {
            auto next = std::next(it);
            const double right = next == steps_.end() ? ref_x : next->first;
            total += (right - it->first) * (ref_y - it->second);
        }
        return total;
    }

private:
    std::map<double, double> steps_;
};

}  // namespace

double hypervolume(std::span<const ObjectiveVector> front, const ObjectiveVector& ref) {
    std::vector<ObjectiveVector> pts;
    pts.reserve(front.size());
    for (const auto& p : front) {
        if (strictly_better(p, ref)) pts.push_back(p);
    }
    if (pts.empty()) return 0.0;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });

    Staircase stair;
    double volume = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        stair.insert(pts[i][0], pts[i][1]);
        const double z_next = i + 1 < pts.size() ? pts[i + 1][2] : ref[2];
        if (z_next > pts[i][2]) volume += stair.area(ref[0], ref[1]) * (z_next - pts[i][2]);
    }
    return volume;
}

double sample_efficiency(std::span<const ObjectiveVector> samples, const ObjectiveVector& ref) {
    if (samples.empty()) return 0.0;
    const auto better = std::count_if(samples.begin(), samples.end(),
                                      [&](const auto& s) { return strictly_better(s, ref); });
    return static_cast<double>(better) / static_cast<double>(samples.size());
}

std::vector<int> non_dominated_ranks(std::span<const ObjectiveVector> points) {
    const std::size_t n = points.size();
    std::vector<int> rank(n, -1);
    std::vector<int> dominated_by(n, 0);
    std::vector<std::vector<std::size_t>> dominating(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) {
                dominating[i].push_back(j);
                ++dominated_by[j];
            } else if (dominates(points[j], points[i])) {
                dominating[j].push_back(i);
                ++dominated_by[i];
            }
        }
    }
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        if (dominated_by[i] == 0) current.push_back(i);
    }
    int level = 0;
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t i : current) {
            rank[i] = level;
            for (std::size_t j : dominating[i]) {
                if (--dominated_by[j] == 0) next.push_back(j);
            }
        }
        current = std::move(next);
        ++level;
    }
    return rank;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> points, std::span<const std::size_t> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 3; ++m) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return points[front[a]][m] < points[front[b]][m]; });
        const double lo = points[front[order.front()]][m];
        const double hi = points[front[order.back()]][m];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) continue;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] += (points[front[order[k + 1]]][m] - points[front[order[k - 1]]][m]) / (hi - lo);
        }
    }
    return dist;
}

bool ParetoArchive::insert(const DesignPoint& design, const ObjectiveVector& obj) {
    for (const auto& e : entries_) {
        if (e.design == design || dominates(e.objectives, obj)) return false;
    }
    std::erase_if(entries_, [&](const ArchiveEntry& e) { return dominates(obj, e.objectives); });
    entries_.push_back({design, obj});
    return true;
}

std::vector<ObjectiveVector> ParetoArchive::objectives() const {
    std::vector<ObjectiveVector> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.objectives);
    return out;
}

double ParetoArchive::hypervolume() const {
    const auto objs = objectives();
    return lumina::hypervolume(objs, reference_);
}

}  // namespace lumina

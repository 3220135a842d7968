#include "flcc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "flcc/csv.hpp"
#include "flcc/rng.hpp"

namespace flcc {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

double hex_half_width(double radius) { return 0.5 * kSqrt3 * radius; }

// Pointy-top vertices, starting at the top and going counter-clockwise.
std::vector<std::pair<double, double>> hex_vertices(double cx, double cy, double radius) {
    std::vector<std::pair<double, double>> v;
    for (int k = 0; k < 6; ++k) {
        double ang = (90.0 + 60.0 * k) * M_PI / 180.0;
        v.emplace_back(cx + radius * std::cos(ang), cy + radius * std::sin(ang));
    }
    return v;
}

bool point_in_rect(double px, double py, const Region& region) {
    return px >= 0.0 && px <= region.width && py >= 0.0 && py <= region.height;
}

bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy,
                        double dx, double dy) {
    auto orient = [](double ox, double oy, double px, double py, double qx, double qy) {
        double v = (px - ox) * (qy - oy) - (py - oy) * (qx - ox);
        if (v > 0) return 1;
        if (v < 0) return -1;
        return 0;
    };
    int o1 = orient(ax, ay, bx, by, cx, cy);
    int o2 = orient(ax, ay, bx, by, dx, dy);
    int o3 = orient(cx, cy, dx, dy, ax, ay);
    int o4 = orient(cx, cy, dx, dy, bx, by);
    if (o1 != o2 && o3 != o4) return true;
    // Collinear overlaps count as touching.
    auto on_seg = [](double ox, double oy, double px, double py, double qx, double qy) {
        return std::min(ox, qx) <= px && px <= std::max(ox, qx) && std::min(oy, qy) <= py &&
               py <= std::max(oy, qy);
    };
    if (o1 == 0 && on_seg(ax, ay, cx, cy, bx, by)) return true;
    if (o2 == 0 && on_seg(ax, ay, dx, dy, bx, by)) return true;
    if (o3 == 0 && on_seg(cx, cy, ax, ay, dx, dy)) return true;
    if (o4 == 0 && on_seg(cx, cy, bx, by, dx, dy)) return true;
    return false;
}

bool hex_intersects_region(double cx, double cy, double radius, const Region& region) {
    if (point_in_hex(0.0, 0.0, cx, cy, radius) ||
        point_in_hex(region.width, 0.0, cx, cy, radius) ||
        point_in_hex(0.0, region.height, cx, cy, radius) ||
        point_in_hex(region.width, region.height, cx, cy, radius))
        return true;
    auto verts = hex_vertices(cx, cy, radius);
    for (const auto& [vx, vy] : verts)
        if (point_in_rect(vx, vy, region)) return true;
    const double rx[4] = {0.0, region.width, region.width, 0.0};
    const double ry[4] = {0.0, 0.0, region.height, region.height};
    for (int e = 0; e < 6; ++e) {
        auto [ax, ay] = verts[e];
        auto [bx, by] = verts[(e + 1) % 6];
        for (int f = 0; f < 4; ++f) {
            if (segments_intersect(ax, ay, bx, by, rx[f], ry[f], rx[(f + 1) % 4],
                                   ry[(f + 1) % 4]))
                return true;
        }
    }
    return false;
}

NodeRole draw_role(std::mt19937_64& eng, double untrusted_fraction) {
    if (untrusted_fraction <= 0.0) return NodeRole::Honest;
    std::bernoulli_distribution flag(untrusted_fraction);
    return flag(eng) ? NodeRole::Untrusted : NodeRole::Honest;
}

std::vector<NodeSite> mark_untrusted(std::vector<NodeSite> nodes, int untrusted_count,
                                     std::mt19937_64& eng) {
    std::vector<int> order(nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), eng);
    for (int i = 0; i < untrusted_count && i < static_cast<int>(order.size()); ++i)
        nodes[order[i]].role = NodeRole::Untrusted;
    return nodes;
}

}  // namespace

bool point_in_hex(double px, double py, double cx, double cy, double radius) {
    double dx = std::abs(px - cx);
    double dy = std::abs(py - cy);
    if (dx > hex_half_width(radius)) return false;
    return dy <= radius - dx / kSqrt3;
}

const Cell& CellPlan::cell_by_id(int id) const {
    if (id >= 0 && id < static_cast<int>(cells.size()) && cells[id].id == id)
        return cells[id];
    for (const Cell& c : cells)
        if (c.id == id) return c;
    throw InvalidParameter("cell_by_id: no cell with id " + std::to_string(id));
}

int CellPlan::cell_at(double x, double y) const {
    int best = -1;
    double best_d2 = 0.0;
    for (const Cell& c : cells) {
        double dx = x - c.cx;
        double dy = y - c.cy;
        double d2 = dx * dx + dy * dy;
        if (best < 0 || d2 < best_d2) {
            best = c.id;
            best_d2 = d2;
        }
    }
    return best;
}

std::vector<NodeSite> sample_ppp(double lambda, const Region& region,
                                 double untrusted_fraction, std::uint64_t rng_seed,
                                 double tx_power) {
    if (!region.valid()) throw InvalidParameter("sample_ppp: region must have positive size");
    if (lambda < 0.0) throw InvalidParameter("sample_ppp: lambda must be >= 0");
    if (untrusted_fraction < 0.0 || untrusted_fraction > 1.0)
        throw InvalidParameter("sample_ppp: untrusted_fraction must be in [0,1]");
    auto eng = make_engine(rng_seed, {kStreamLayout});
    std::size_t count = 0;
    if (lambda > 0.0) {
        std::poisson_distribution<std::size_t> n(lambda * region.area());
        count = n(eng);
    }
    std::uniform_real_distribution<double> ux(0.0, region.width);
    std::uniform_real_distribution<double> uy(0.0, region.height);
    std::vector<NodeSite> nodes;
    nodes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        NodeSite n;
        n.id = static_cast<int>(i);
        n.x = ux(eng);
        n.y = uy(eng);
        n.role = draw_role(eng, untrusted_fraction);
        n.tx_power = tx_power;
        nodes.push_back(n);
    }
    return nodes;
}

std::vector<NodeSite> sample_fixed_count(int count, int untrusted_count, const Region& region,
                                         std::uint64_t rng_seed, double tx_power) {
    if (!region.valid()) throw InvalidParameter("sample_fixed_count: bad region");
    if (count < 0 || untrusted_count < 0 || untrusted_count > count)
        throw InvalidParameter("sample_fixed_count: bad counts");
    auto eng = make_engine(rng_seed, {kStreamLayout});
    std::uniform_real_distribution<double> ux(0.0, region.width);
    std::uniform_real_distribution<double> uy(0.0, region.height);
    std::vector<NodeSite> nodes;
    nodes.reserve(count);
    for (int i = 0; i < count; ++i)
        nodes.push_back({i, ux(eng), uy(eng), -1, NodeRole::Honest, tx_power});
    return mark_untrusted(std::move(nodes), untrusted_count, eng);
}

std::vector<NodeSite> sample_fixed_in_plan(int count, int untrusted_count, const Region& region,
                                           const CellPlan& plan, std::uint64_t rng_seed,
                                           double tx_power) {
    if (plan.cells.empty()) throw InvalidParameter("sample_fixed_in_plan: empty plan");
    if (count < 0 || untrusted_count < 0 || untrusted_count > count)
        throw InvalidParameter("sample_fixed_in_plan: bad counts");
    auto eng = make_engine(rng_seed, {kStreamLayout});
    std::uniform_real_distribution<double> ux(0.0, region.width);
    std::uniform_real_distribution<double> uy(0.0, region.height);
    auto inside_some_hex = [&](double x, double y) {
        for (const Cell& c : plan.cells)
            if (point_in_hex(x, y, c.cx, c.cy, plan.cell_radius)) return true;
        return false;
    };
    std::vector<NodeSite> nodes;
    nodes.reserve(count);
    for (int i = 0; i < count; ++i) {
        double x = 0.0, y = 0.0;
        int attempts = 0;
        do {
            if (++attempts > 1000000)
                throw InvalidParameter(
                    "sample_fixed_in_plan: region and plan barely overlap");
            x = ux(eng);
            y = uy(eng);
        } while (!inside_some_hex(x, y));
        nodes.push_back({i, x, y, -1, NodeRole::Honest, tx_power});
    }
    return mark_untrusted(std::move(nodes), untrusted_count, eng);
}

CellPlan build_hex_tessellation(const Region& region, double cell_radius) {
    if (cell_radius <= 0.0)
        throw InvalidParameter("build_hex_tessellation: cell_radius must be > 0");
    if (!region.valid())
        throw InvalidParameter("build_hex_tessellation: region must have positive size");
    CellPlan plan;
    plan.cell_radius = cell_radius;
    const double pitch = kSqrt3 * cell_radius;   // neighbor center distance
    const double row_step = 1.5 * cell_radius;   // vertical row spacing
    int row_lo = static_cast<int>(std::floor((-cell_radius) / row_step)) - 1;
    int row_hi = static_cast<int>(std::ceil((region.height + cell_radius) / row_step)) + 1;
    int id = 0;
    for (int row = row_lo; row <= row_hi; ++row) {
        double cy = row * row_step;
        if (cy < -cell_radius || cy > region.height + cell_radius) continue;
        int parity = ((row % 2) + 2) % 2;
        double offset = 0.5 * parity * pitch;
        double half_w = hex_half_width(cell_radius);
        int col_lo = static_cast<int>(std::floor((-half_w - offset) / pitch)) - 1;
        int col_hi = static_cast<int>(std::ceil((region.width + half_w - offset) / pitch)) + 1;
        for (int col = col_lo; col <= col_hi; ++col) {
            double cx = col * pitch + offset;
            // Shrink slightly so zero-area boundary touches do not count as
            // an intersection; included cells own a positive-area patch.
            if (!hex_intersects_region(cx, cy, cell_radius * (1.0 - 1e-9), region)) continue;
            Cell c;
            c.id = id++;
            c.cx = cx;
            c.cy = cy;
            c.q = col - (row - parity) / 2;
            c.r = row;
            plan.cells.push_back(c);
        }
    }
    return plan;
}

FlowerLayout make_flower_plan(double cell_radius) {
    if (cell_radius <= 0.0) throw InvalidParameter("make_flower_plan: cell_radius must be > 0");
    const double pitch = kSqrt3 * cell_radius;
    // Axial offsets: center first, then the ring scanned row-major.
    const int axial[7][2] = {{0, 0}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}};
    const double cx0 = 1.5 * kSqrt3 * cell_radius;
    const double cy0 = 2.5 * cell_radius;
    FlowerLayout out;
    out.plan.cell_radius = cell_radius;
    out.region = {2.0 * cx0, 2.0 * cy0};
    for (int i = 0; i < 7; ++i) {
        Cell c;
        c.id = i;
        c.q = axial[i][0];
        c.r = axial[i][1];
        c.cx = cx0 + pitch * (c.q + 0.5 * c.r);
        c.cy = cy0 + 1.5 * cell_radius * c.r;
        out.plan.cells.push_back(c);
    }
    return out;
}

CellPlan assign_frequencies(CellPlan plan, int num_channels) {
    if (num_channels < 1) throw InvalidParameter("assign_frequencies: num_channels must be >= 1");
    plan.num_channels = num_channels;
    plan.coloring_warning = false;
    if (num_channels == 7) {
        // Standard reuse-7 pattern; co-channel centers are >= sqrt(21)*radius apart.
        for (Cell& c : plan.cells) c.channel = (((c.q + 5 * c.r) % 7) + 7) % 7;
        return plan;
    }
    // Conflict graph: centers within 2*sqrt(3)*radius must differ.
    const double limit = 2.0 * kSqrt3 * plan.cell_radius * (1.0 + 1e-9);
    const double limit2 = limit * limit;
    std::vector<std::vector<int>> conflicts(plan.cells.size());
    for (std::size_t i = 0; i < plan.cells.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.cells.size(); ++j) {
            double dx = plan.cells[i].cx - plan.cells[j].cx;
            double dy = plan.cells[i].cy - plan.cells[j].cy;
            if (dx * dx + dy * dy <= limit2) {
                conflicts[i].push_back(static_cast<int>(j));
                conflicts[j].push_back(static_cast<int>(i));
            }
        }
    }
    for (std::size_t i = 0; i < plan.cells.size(); ++i) {
        std::vector<int> used_count(num_channels, 0);
        std::vector<bool> used(num_channels, false);
        for (int j : conflicts[i]) {
            int ch = plan.cells[j].channel;
            if (ch >= 0) {
                used[ch] = true;
                ++used_count[ch];
            }
        }
        int pick = -1;
        for (int ch = 0; ch < num_channels; ++ch) {
            if (!used[ch]) {
                pick = ch;
                break;
            }
        }
        if (pick < 0) {
            // Out of channels: take the least-used one among neighbors.
            pick = static_cast<int>(std::min_element(used_count.begin(), used_count.end()) -
                                    used_count.begin());
            plan.coloring_warning = true;
        }
        plan.cells[i].channel = pick;
    }
    return plan;
}

std::vector<NodeSite> assign_cells(std::vector<NodeSite> nodes, const CellPlan& plan) {
    if (plan.cells.empty()) throw InvalidParameter("assign_cells: plan has no cells");
    for (NodeSite& n : nodes) {
        int cell = plan.cell_at(n.x, n.y);
        const Cell& c = plan.cells[cell];
        // Coverage guard: the nearest hexagon must actually contain the node
        // (allowing for boundary rounding).
        double dx = std::abs(n.x - c.cx);
        double dy = std::abs(n.y - c.cy);
        double slack = 1e-9 * std::max(1.0, plan.cell_radius);
        if (dx > hex_half_width(plan.cell_radius) + slack ||
            dy > plan.cell_radius - dx / kSqrt3 + slack)
            throw InvalidParameter("assign_cells: node " + std::to_string(n.id) +
                                   " lies outside every cell");
        n.cell_id = cell;
    }
    return nodes;
}

void write_nodes_csv(const std::string& path, const std::vector<NodeSite>& nodes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "node_id,x,y,cell_id,role,tx_power\n";
    for (const NodeSite& n : nodes) {
        out << n.id << ',' << fmt_double(n.x) << ',' << fmt_double(n.y) << ',' << n.cell_id << ','
            << (n.role == NodeRole::Untrusted ? "untrusted" : "honest") << ','
            << fmt_double(n.tx_power) << '\n';
    }
}

void write_cells_csv(const std::string& path, const CellPlan& plan) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "cell_id,cx,cy,channel\n";
    for (const Cell& c : plan.cells)
        out << c.id << ',' << fmt_double(c.cx) << ',' << fmt_double(c.cy) << ',' << c.channel
            << '\n';
}

}  // namespace flcc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flcc/errors.hpp"

namespace flcc {

/// Axis-aligned simulation rectangle anchored at the origin.
struct Region {
    double width = 500.0;
    double height = 500.0;
    double area() const { return width * height; }
    bool valid() const { return width > 0.0 && height > 0.0; }
};

enum class NodeRole { Honest, Untrusted };

struct NodeSite {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    int cell_id = -1;
    NodeRole role = NodeRole::Honest;
    double tx_power = 1.0;
};

/// One hexagonal cell: server at the center, axial lattice coordinates kept
/// around so the reuse pattern can be computed without re-deriving them.
struct Cell {
    int id = 0;
    double cx = 0.0;
    double cy = 0.0;
    int q = 0;  // axial column
    int r = 0;  // axial row
    int channel = -1;
};

/// Hexagonal tessellation. Cells are pointy-top hexagons of circumradius
/// cell_radius; centers form a triangular lattice with pitch sqrt(3)*radius.
struct CellPlan {
    std::vector<Cell> cells;
    double cell_radius = 0.0;
    int num_channels = 0;
    // Set when assign_frequencies could not give conflicting cells distinct
    // channels (num_channels below the chromatic requirement).
    bool coloring_warning = false;

    /// Index of the cell owning (x, y): nearest center, lowest id on ties.
    int cell_at(double x, double y) const;

    /// Cell with the given id (ids are dense and ordered by construction).
    const Cell& cell_by_id(int id) const;
};

/// True when (px, py) lies inside (or on) the pointy-top hexagon at (cx, cy).
bool point_in_hex(double px, double py, double cx, double cy, double radius);

/// Poisson point process of the given intensity over the region. Each node is
/// independently marked Untrusted with probability untrusted_fraction.
std::vector<NodeSite> sample_ppp(double lambda, const Region& region,
                                 double untrusted_fraction, std::uint64_t rng_seed,
                                 double tx_power = 1.0);

/// PPP conditioned on an exact node count (uniform positions); exactly
/// untrusted_count nodes, chosen by a seeded shuffle, are marked Untrusted.
std::vector<NodeSite> sample_fixed_count(int count, int untrusted_count,
                                         const Region& region, std::uint64_t rng_seed,
                                         double tx_power = 1.0);

/// Same, but positions are drawn uniformly over the union of the plan's
/// hexagons (rejection from the region) so every node lands inside a cell.
std::vector<NodeSite> sample_fixed_in_plan(int count, int untrusted_count,
                                           const Region& region, const CellPlan& plan,
                                           std::uint64_t rng_seed, double tx_power = 1.0);

/// All lattice hexagons overlapping the region with positive area;
/// frequencies unassigned.
CellPlan build_hex_tessellation(const Region& region, double cell_radius);

/// Canonical 7-cell cluster (center plus its 6 neighbors), shifted so the
/// bounding box is anchored at the origin. Returns the plan and its region.
struct FlowerLayout {
    CellPlan plan;
    Region region;
};
FlowerLayout make_flower_plan(double cell_radius);

/// Frequency coloring. num_channels == 7 uses the standard reuse-7 pattern
/// from axial coordinates (co-channel distance sqrt(21)*radius); otherwise a
/// greedy lowest-available coloring of the conflict graph (centers within
/// 2*sqrt(3)*radius). Sets coloring_warning when conflicts remain.
CellPlan assign_frequencies(CellPlan plan, int num_channels);

/// Populate each node's cell_id by nearest-center assignment.
std::vector<NodeSite> assign_cells(std::vector<NodeSite> nodes, const CellPlan& plan);

void write_nodes_csv(const std::string& path, const std::vector<NodeSite>& nodes);
void write_cells_csv(const std::string& path, const CellPlan& plan);

}  // namespace flcc

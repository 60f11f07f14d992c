#pragma once

// Brute-force reference computations used to check the library. None of
// these call into the code paths they verify.

#include <map>
#include <utility>
#include <vector>

#include "epicflow/image.hpp"

namespace epic::testing {

/// Grid step cost recomputed from its definition.
double oracle_step(double cp, double cq);

/// Bellman-Ford relaxation to a fixed point on the 4-connected grid.
std::vector<double> bellman_ford(const CostMap& cost, Pixel source);

/// Boundary-crossing edges between labeled cells, minimum candidate per pair (a < b).
std::map<std::pair<int, int>, double> brute_graph_edges(const Grid<int>& labels, const Grid<double>& dist,
                                                        const CostMap& cost);

/// All-pairs shortest paths over an undirected weighted edge list.
std::vector<std::vector<double>> floyd_warshall(std::size_t nodes, const std::map<std::pair<int, int>, double>& edges);

/// Nadaraya-Watson at one pixel with explicit distances: picks the k
/// smallest by (distance, index), weights exp(-a d), averages displacements.
Vec2 brute_nw(const MatchSet& matches, const std::vector<double>& distances, std::size_t k, double a,
              std::vector<int>* chosen = nullptr);

/// Smaller eigenvalue of the luminance structure tensor over a clamped patch,
/// via an explicit 2x2 symmetric eigensolver.
double brute_min_eigenvalue(const Image& image, Pixel p, int radius);

/// Unweighted least-squares affine fit target = A p + t through normal equations.
void normal_equations_affine(const MatchSet& matches, double a_out[4], double t_out[2]);

}  // namespace epic::testing

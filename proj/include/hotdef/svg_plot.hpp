#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hotdef/experiments.hpp"

namespace hotdef {

enum class PlotKind { alignments, eigenvalues, eta };

PlotKind parse_plot_kind(const std::string& name);
std::string to_string(PlotKind kind);

/// Sweep comparison figure: empirical means as dots with +-1 std whiskers,
/// predictions as lines, x axis beta_1. Output depends only on the rows.
/// Throws std::invalid_argument on an empty row list.
std::string render_sweep_svg(const std::vector<SweepRow>& rows, PlotKind kind);

/// Eigenvalue histogram with the semicircle density overlaid.
std::string render_spectrum_svg(const SpectrumResult& result);

/// Renders and writes; nothing is written if rendering fails.
void emit_plot(const std::vector<SweepRow>& rows, PlotKind kind,
               const std::filesystem::path& path);
void emit_plot(const SpectrumResult& result, const std::filesystem::path& path);

}  // namespace hotdef

#pragma once

// Plot scripts written next to the CSV output. They need Python with
// matplotlib and read the CSV files from their own directory.

#include <string>

namespace jpose::cli {

std::string compose_sweep_plot_script();
std::string relpose_alpha_plot_script();
std::string slam_relpose_plot_script();
std::string convert_demo_plot_script();

}  // namespace jpose::cli

#pragma once

#include <iosfwd>
#include <string>

#include "miaaudit/nnet.hpp"

namespace miaaudit::ckpt {

// Single-network checkpoint:
//   line 1: "MIAAUDIT-CKPT v1"
//   line 2: layer spec "in:out:activation,..."
//   then one whitespace-separated decimal line per weight-matrix row and one
//   per bias vector, layer by layer, printed with 17 significant digits so a
//   save/load/save cycle is byte-identical.
inline constexpr const char* kMagic = "MIAAUDIT-CKPT v1";

void write_net(std::ostream& out, const nnet::DenseNet& net);
nnet::DenseNet read_net(std::istream& in);

void save_net(const std::string& path, const nnet::DenseNet& net);
nnet::DenseNet load_net(const std::string& path);

// 17-significant-digit decimal rendering used by every text artifact.
std::string format_double(double v);

}  // namespace miaaudit::ckpt

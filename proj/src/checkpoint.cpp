#include "miaaudit/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace miaaudit::ckpt {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_net(std::ostream& out, const nnet::DenseNet& net) {
    out << kMagic << '\n';
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const nnet::Layer& layer = net.layers[l];
        if (l) out << ',';
        out << layer.in_dim() << ':' << layer.out_dim() << ':'
            << nnet::activation_name(layer.activation);
    }
    out << '\n';
    for (const nnet::Layer& layer : net.layers) {
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            for (std::size_t j = 0; j < layer.in_dim(); ++j) {
                if (j) out << ' ';
                out << format_double(layer.weights(i, j));
            }
            out << '\n';
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            if (i) out << ' ';
            out << format_double(layer.bias[i]);
        }
        out << '\n';
    }
}

namespace {

std::vector<double> read_value_line(std::istream& in, std::size_t expected, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(std::string("checkpoint: unexpected end of file reading ") + what);
    }
    std::istringstream ss(line);
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        if (!(ss >> values[i])) {
            throw std::runtime_error(std::string("checkpoint: short ") + what + " line");
        }
    }
    double extra;
    if (ss >> extra) throw std::runtime_error(std::string("checkpoint: overlong ") + what + " line");
    return values;
}

}  // namespace

nnet::DenseNet read_net(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw std::runtime_error("checkpoint: bad or missing magic line");
    }
    if (!std::getline(in, line) || line.empty()) {
        throw std::runtime_error("checkpoint: missing layer spec line");
    }
    nnet::DenseNet net;
    std::istringstream spec(line);
    std::string part;
    while (std::getline(spec, part, ',')) {
        std::size_t c1 = part.find(':');
        std::size_t c2 = part.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw std::runtime_error("checkpoint: malformed layer spec '" + part + "'");
        }
        nnet::Layer layer;
        const std::size_t in_dim = std::stoul(part.substr(0, c1));
        const std::size_t out_dim = std::stoul(part.substr(c1 + 1, c2 - c1 - 1));
        if (in_dim == 0 || out_dim == 0) throw std::runtime_error("checkpoint: zero-size layer");
        layer.activation = nnet::activation_from_name(part.substr(c2 + 1));
        layer.weights = Matrix(out_dim, in_dim);
        layer.bias.assign(out_dim, 0.0);
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.empty()) throw std::runtime_error("checkpoint: empty layer spec");
    for (std::size_t l = 1; l < net.depth(); ++l) {
        if (net.layers[l].in_dim() != net.layers[l - 1].out_dim()) {
            throw std::runtime_error("checkpoint: layer dimensions do not chain");
        }
    }
    for (nnet::Layer& layer : net.layers) {
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            std::vector<double> row = read_value_line(in, layer.in_dim(), "weight row");
            for (std::size_t j = 0; j < layer.in_dim(); ++j) layer.weights(i, j) = row[j];
        }
        layer.bias = read_value_line(in, layer.out_dim(), "bias");
    }
    return net;
}

void save_net(const std::string& path, const nnet::DenseNet& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    write_net(out, net);
}

nnet::DenseNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open for reading: " + path);
    return read_net(in);
}

}  // namespace miaaudit::ckpt

#include "trc/dtf.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trc {

namespace {

Shape parse_header(std::istream& in, const std::string& magic, const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": missing header");
  std::istringstream hs(line);
  std::string tag;
  int order = 0;
  if (!(hs >> tag >> order) || tag != magic || order <= 0)
    throw std::runtime_error(path + ": bad " + magic + " header");
  Shape shape;
  shape.dims.resize(order);
  for (int n = 0; n < order; ++n)
    if (!(hs >> shape.dims[n]) || shape.dims[n] <= 0)
      throw std::runtime_error(path + ": bad extent in header");
  return shape;
}

void write_header(std::ostream& out, const std::string& magic, const Shape& shape) {
  out << magic << ' ' << shape.order();
  for (index_t d : shape.dims) out << ' ' << d;
  out << '\n';
}

}  // namespace

void write_dtf(const std::string& path, const DenseTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dtf: cannot open " + path);
  write_header(out, "DTF1", t.shape());
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("write_dtf: write failed for " + path);
}

DenseTensor read_dtf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dtf: cannot open " + path);
  Shape shape = parse_header(in, "DTF1", path);
  DenseTensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(double)))
    throw std::runtime_error("read_dtf: truncated payload in " + path);
  if (!t.all_finite())
    throw std::runtime_error("read_dtf: non-finite entry in " + path);
  return t;
}

void write_msk(const std::string& path, const IndexSet& obs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_msk: cannot open " + path);
  write_header(out, "MSK1", obs.shape());
  std::vector<char> bytes(obs.shape().numel(), 0);
  for (index_t f : obs.flat()) bytes[f] = 1;
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_msk: write failed for " + path);
}

IndexSet read_msk(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_msk: cannot open " + path);
  Shape shape = parse_header(in, "MSK1", path);
  std::vector<char> bytes(shape.numel());
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw std::runtime_error("read_msk: truncated payload in " + path);
  std::vector<index_t> flat;
  for (index_t k = 0; k < static_cast<index_t>(bytes.size()); ++k) {
    if (bytes[k] == 1)
      flat.push_back(k);
    else if (bytes[k] != 0)
      throw std::runtime_error("read_msk: byte not 0/1 in " + path);
  }
  return {shape, std::move(flat)};
}

}  // namespace trc

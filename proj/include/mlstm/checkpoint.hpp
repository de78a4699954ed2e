#ifndef MLSTM_CHECKPOINT_HPP
#define MLSTM_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mlstm/errors.hpp"
#include "mlstm/matcher.hpp"

namespace mlstm {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_doubles_le(std::ostream& out, const Tensor& t) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(t.data()), sizeof(double) * static_cast<size_t>(t.size()));
  } else {
    for (int i = 0; i < t.size(); ++i) {
      uint64_t bits;
      std::memcpy(&bits, &t.data()[i], 8);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      out.write(buf, 8);
    }
  }
}

inline void read_doubles_le(std::istream& in, Tensor& t) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(t.data()), sizeof(double) * static_cast<size_t>(t.size()));
  } else {
    for (int i = 0; i < t.size(); ++i) {
      char buf[8];
      in.read(buf, 8);
      uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
      std::memcpy(&t.data()[i], &bits, 8);
    }
  }
  if (!in) throw ParseError("checkpoint: truncated parameter data");
}

}  // namespace detail

// Self-describing model snapshot: a structured key-value text header naming
// the variant, dimensions and every parameter block, followed by the raw
// little-endian 64-bit float arrays in header order. Doubles are stored
// exactly, so save -> load -> save is byte-identical.
inline void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const ModelConfig& cfg = model.config();
  out << "mlstm-checkpoint " << kCheckpointVersion << "\n";
  out << "variant " << variant_name(cfg.variant) << "\n";
  out << "d " << cfg.d << "\n";
  out << "embed_dim " << cfg.embed_dim << "\n";
  out << "d_out " << model.d_out() << "\n";
  out << "shared_encoder " << (cfg.shared_encoder ? 1 : 0) << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "init xavier_uniform\n";
  out << "classes entailment contradiction neutral\n";
  out << "tensors " << model.store().count() << "\n";
  for (const auto& e : model.store().entries()) {
    out << "tensor " << e.name << " " << e.value.ndim();
    for (int i = 0; i < e.value.ndim(); ++i) out << " " << e.value.dim(i);
    out << "\n";
  }
  out << "data\n";
  for (const auto& e : model.store().entries()) detail::write_doubles_le(out, e.value);
  if (!out) throw IoError("write failed for " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: empty file " + path);
  {
    std::istringstream iss(line);
    std::string magic;
    int version = -1;
    iss >> magic >> version;
    if (magic != "mlstm-checkpoint") throw ParseError("checkpoint: bad magic in " + path);
    if (version != kCheckpointVersion)
      throw InvalidInputError("checkpoint: version " + std::to_string(version) + " is incompatible (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }

  ModelConfig cfg;
  int declared_dout = -1;
  size_t tensor_count = 0;
  std::vector<std::pair<std::string, std::vector<int>>> blocks;
  while (std::getline(in, line)) {
    if (line == "data") break;
    std::istringstream iss(line);
    std::string key;
    iss >> key;
    if (key == "variant") {
      std::string v;
      iss >> v;
      cfg.variant = variant_from_string(v);
    } else if (key == "d") {
      iss >> cfg.d;
    } else if (key == "embed_dim") {
      iss >> cfg.embed_dim;
    } else if (key == "d_out") {
      iss >> declared_dout;
    } else if (key == "shared_encoder") {
      int v = 1;
      iss >> v;
      cfg.shared_encoder = v != 0;
    } else if (key == "seed") {
      iss >> cfg.seed;
    } else if (key == "tensors") {
      iss >> tensor_count;
    } else if (key == "tensor") {
      std::string name;
      int ndim = 0;
      iss >> name >> ndim;
      std::vector<int> dims(static_cast<size_t>(ndim));
      for (int i = 0; i < ndim; ++i) iss >> dims[static_cast<size_t>(i)];
      if (!iss) throw ParseError("checkpoint: malformed tensor line \"" + line + "\"");
      blocks.emplace_back(name, dims);
    } else if (key == "init" || key == "classes" || key.empty()) {
      // informational
    } else {
      throw ParseError("checkpoint: unknown header key \"" + key + "\"");
    }
  }
  if (blocks.size() != tensor_count)
    throw ParseError("checkpoint: header declares " + std::to_string(tensor_count) + " tensors, found " +
                     std::to_string(blocks.size()));

  Model model(cfg);
  if (declared_dout >= 0 && declared_dout != model.d_out())
    throw ParseError("checkpoint: d_out " + std::to_string(declared_dout) + " inconsistent with layout");
  auto& entries = model.store().entries();
  if (entries.size() != blocks.size())
    throw ParseError("checkpoint: layout mismatch (" + std::to_string(blocks.size()) + " blocks vs " +
                     std::to_string(entries.size()) + " parameters)");
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != blocks[i].first || entries[i].value.shape() != blocks[i].second)
      throw ParseError("checkpoint: block " + blocks[i].first + " does not match parameter " + entries[i].name);
    detail::read_doubles_le(in, entries[i].value);
  }
  return model;
}

}  // namespace mlstm

#endif

#pragma once

#include <string>

#include "json.hpp"
#include "ppm/nn/param_store.hpp"

namespace ppm::nn {

// Self-describing checkpoint container:
//   bytes 0..7   magic "PPMCKPT1"
//   bytes 8..11  uint32 LE, header length H
//   bytes 12..   header: UTF-8 JSON with sorted keys; its "tensors" array
//                lists {name, rows, cols, kind(param|buffer)} in storage order
//   then         rows*cols float64 LE values per tensor, in that order
// The header's "meta" object carries caller data (model type, config, vocab,
// normalizer, seed). Tensors are stored params-first, each group in sorted
// name order, so identical state serializes to identical bytes.
struct Checkpoint {
    nlohmann::json meta;
    ParamStore params;
    ParamStore buffers;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta, const ParamStore& params,
                     const ParamStore& buffers);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ppm::nn

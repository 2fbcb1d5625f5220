#pragma once

#include <filesystem>

#include "lsg/autodiff.hpp"

namespace lsg {

// Checkpoint layout: magic "LSG1", u32 little-endian header length, JSON
// header (parameter names, shapes, dtype tag, optimizer-state flag), then the
// tensors as raw little-endian 32-bit floats in header order. When optimizer
// state is included, Adam m and v follow each parameter's values.
template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store,
                     bool include_optimizer_state = false, long adam_step = 0);

template <class T>
struct LoadedCheckpoint {
    ParamStore<T> store;
    bool has_optimizer_state = false;
    long adam_step = 0;
};

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

} // namespace lsg

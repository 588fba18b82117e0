#include "oreyolo/checkpoint.hpp"

#include "oreyolo/errors.hpp"

namespace oreyolo {

void save_checkpoint(const std::filesystem::path& path, OreYolo& model, int epoch, double fitness) {
  KeyValueFile kv;
  model->config().store(kv);
  torch::serialize::OutputArchive archive;
  model->save(archive);
  archive.write("config", c10::IValue(kv.to_string()));
  archive.write("epoch", c10::IValue(static_cast<int64_t>(epoch)));
  archive.write("fitness", c10::IValue(fitness));
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  archive.save_to(path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("checkpoint not found: " + path.string());
  }
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw ConfigError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  c10::IValue value;
  if (!archive.try_read("config", value) || !value.isString()) {
    throw ConfigError(path.string() + " is not an oreyolo checkpoint (no config)");
  }
  const auto kv = KeyValueFile::parse(value.toStringRef(), path.string() + "#config");

  LoadedCheckpoint out;
  for (const auto& [key, v] : kv.entries) {
    if (!out.info.config.apply(key, v)) {
      throw ConfigError("checkpoint " + path.string() + " has unknown config key '" + key + "'");
    }
  }
  out.info.config.validate();
  if (archive.try_read("epoch", value) && value.isInt()) {
    out.info.epoch = static_cast<int>(value.toInt());
  }
  if (archive.try_read("fitness", value) && value.isDouble()) {
    out.info.fitness = value.toDouble();
  }
  out.model = OreYolo(out.info.config);
  try {
    out.model->load(archive);
  } catch (const c10::Error& e) {
    throw ConfigError("checkpoint " + path.string() + " does not match its config: " +
                      e.what_without_backtrace());
  }
  out.model->eval();
  return out;
}

}  // namespace oreyolo

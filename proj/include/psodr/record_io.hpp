#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psodr/core_data.hpp"
#include "psodr/errors.hpp"

namespace psodr {

inline constexpr const char* kRecordFormatVersion = "1";

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  } else {
    return v;
  }
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Writes `<dir>/<subject_id>.json` (manifest) and `<dir>/<subject_id>.f32` (payload).
///
/// The payload is float32 little-endian in sub-epoch, channel, sample order.
/// Samples are narrowed to float32, so a save/load round trip is exact for
/// any record that was itself loaded or synthesized (both are float-valued).
inline std::filesystem::path save_record(const SubjectRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto payload_name = record.subject_id + ".f32";
  const auto manifest_path = dir / (record.subject_id + ".json");

  const auto& t = record.trials;
  std::vector<std::uint32_t> words(t.data.values.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    words[i] = detail::to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(t.data.values[i])));
  {
    std::ofstream out(dir / payload_name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / payload_name).string());
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  }

  nlohmann::ordered_json manifest = {
      {"format_version", kRecordFormatVersion},
      {"subject_id", record.subject_id},
      {"sample_rate_hz", record.sample_rate},
      {"n_subepochs", t.n_subepochs()},
      {"n_channels", t.n_channels()},
      {"n_samples", t.n_samples()},
      {"labels", record.labels},
      {"group_ids", t.group_id},
      {"payload_file", payload_name},
  };
  if (!record.label_names.empty()) manifest["label_names"] = record.label_names;
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

inline SubjectRecord load_record(const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path)) throw DataError("missing manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    const auto text = detail::read_file(manifest_path);
    manifest = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
  }

  SubjectRecord record;
  std::size_t n_sub = 0, n_ch = 0, n_samp = 0;
  std::string payload_file;
  try {
    const auto version = manifest.at("format_version").get<std::string>();
    if (version != kRecordFormatVersion) throw DataError("unknown format version \"" + version + "\"");
    record.subject_id = manifest.at("subject_id").get<std::string>();
    record.sample_rate = manifest.at("sample_rate_hz").get<int>();
    n_sub = manifest.at("n_subepochs").get<std::size_t>();
    n_ch = manifest.at("n_channels").get<std::size_t>();
    n_samp = manifest.at("n_samples").get<std::size_t>();
    record.labels = manifest.at("labels").get<std::vector<int>>();
    record.trials.group_id = manifest.at("group_ids").get<std::vector<int>>();
    payload_file = manifest.at("payload_file").get<std::string>();
    record.label_names = manifest.value("label_names", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  record.n_channels = n_ch;

  if (record.trials.group_id.size() != n_sub) throw DataError("dimension mismatch: group_ids length != n_subepochs");
  const auto bytes = detail::read_file(manifest_path.parent_path() / payload_file);
  const std::size_t expected = n_sub * n_ch * n_samp * 4;
  if (bytes.size() != expected)
    throw DataError("dimension mismatch: payload has " + std::to_string(bytes.size()) + " bytes, manifest implies " +
                    std::to_string(expected));

  record.trials.data = Tensor3(n_sub, n_ch, n_samp);
  auto& values = record.trials.data.values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t w;
    std::memcpy(&w, bytes.data() + 4 * i, 4);
    values[i] = static_cast<double>(std::bit_cast<float>(detail::to_little_endian(w)));
  }
  record.trials.label.resize(n_sub);
  for (std::size_t i = 0; i < n_sub; ++i) {
    const int g = record.trials.group_id[i];
    if (g < 0 || static_cast<std::size_t>(g) >= record.labels.size())
      throw DataError("group id " + std::to_string(g) + " has no label");
    record.trials.label[i] = record.labels[g];
  }
  return record;
}

}  // namespace psodr

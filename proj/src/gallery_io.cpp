#include "fheprotect/gallery_io.hpp"

#include <fstream>
#include <iterator>

#include "fheprotect/error.hpp"
#include "json.hpp"

namespace fheprotect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::Io, "write failed for " + p.string());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) raise(ErrorKind::Io, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorKind::CorruptData, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) raise(ErrorKind::Io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

fs::path blob_name(int subject_id, std::size_t window) {
  return fs::path("blobs") / (std::to_string(subject_id) + "_" + std::to_string(window) + ".bin");
}

}  // namespace

std::vector<std::vector<std::uint8_t>> serialized_templates(std::span<const GalleryRecord> records,
                                                            const EncryptionContext& ctx) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& r : records) {
    for (std::size_t w = 0; w < r.stored.windows.size(); ++w) {
      if (w >= r.nonces.size()) raise(ErrorKind::InvalidArgument, "record has no nonce for window");
      out.push_back(serialize_ciphertext(r.stored.windows[w], ctx, r.nonces[w]));
    }
  }
  return out;
}

void save_gallery(const fs::path& dir, std::span<const GalleryRecord> records, const EncryptionContext* ctx) {
  std::error_code ec;
  fs::create_directories(dir / "blobs", ec);
  if (ec) raise(ErrorKind::Io, "cannot create " + (dir / "blobs").string() + ": " + ec.message());

  json manifest;
  manifest["version"] = kGalleryFormatVersion;
  if (ctx != nullptr) {
    manifest["ctx"] = {{"slot_capacity", ctx->slot_capacity()},
                       {"depth_budget", ctx->depth_budget()},
                       {"key_id", ctx->key_id_hex()}};
  } else {
    manifest["ctx"] = nullptr;
  }
  json recs = json::array();
  for (const auto& r : records) {
    json jr;
    jr["subject_id"] = r.subject_id;
    jr["params_id"] = r.params_id;
    jr["compress_dim"] = r.compress_dim;
    jr["template_norm"] = r.template_norm;
    jr["norm_bound"] = r.norm_bound;
    json paths = json::array();
    json windows = json::array();
    if (r.stored.encrypted()) {
      if (ctx == nullptr) raise(ErrorKind::InvalidArgument, "encrypted gallery needs a context");
      for (std::size_t w = 0; w < r.stored.windows.size(); ++w) {
        const SlotVector& sv = r.stored.windows[w];
        const Nonce nonce = w < r.nonces.size() ? r.nonces[w] : EncryptionContext::fresh_nonce();
        const fs::path rel = blob_name(r.subject_id, w);
        write_bytes(dir / rel, serialize_ciphertext(sv, *ctx, nonce));
        paths.push_back(rel.generic_string());
        windows.push_back({{"logical_len", sv.logical_len()}, {"depth_used", sv.depth_used()}});
      }
    } else {
      jr["values"] = r.stored.values;
    }
    jr["blob_paths"] = paths;
    jr["windows"] = windows;
    recs.push_back(std::move(jr));
  }
  manifest["records"] = std::move(recs);
  write_json(dir / "manifest.json", manifest);
}

std::vector<GalleryRecord> load_gallery(const fs::path& dir, const EncryptionContext* ctx) {
  const json manifest = read_json(dir / "manifest.json");
  std::vector<GalleryRecord> out;
  try {
    if (manifest.at("version").get<int>() != kGalleryFormatVersion) {
      raise(ErrorKind::CorruptData, "unsupported gallery version");
    }
    const json& jctx = manifest.at("ctx");
    if (!jctx.is_null() && ctx != nullptr) {
      if (jctx.at("key_id").get<std::string>() != ctx->key_id_hex()) {
        raise(ErrorKind::KeyMismatch, "gallery was written under key " +
                                          jctx.at("key_id").get<std::string>());
      }
      if (jctx.at("slot_capacity").get<std::size_t>() != ctx->slot_capacity()) {
        raise(ErrorKind::KeyMismatch, "gallery slot capacity differs from the context");
      }
    }
    for (const json& jr : manifest.at("records")) {
      GalleryRecord r;
      r.subject_id = jr.at("subject_id").get<int>();
      r.params_id = jr.at("params_id").get<std::string>();
      r.compress_dim = jr.at("compress_dim").get<std::size_t>();
      r.template_norm = jr.at("template_norm").get<double>();
      r.norm_bound = jr.at("norm_bound").get<double>();
      r.stored.params_id = r.params_id;
      const json& paths = jr.at("blob_paths");
      const json& windows = jr.at("windows");
      if (paths.size() != windows.size()) raise(ErrorKind::CorruptData, "blob/window count mismatch");
      if (paths.empty()) {
        r.stored.values = jr.at("values").get<std::vector<double>>();
      } else if (ctx == nullptr) {
        raise(ErrorKind::InvalidArgument, "encrypted gallery needs a context");
      }
      for (std::size_t w = 0; w < paths.size(); ++w) {
        const auto bytes = read_bytes(dir / paths[w].get<std::string>());
        auto d = deserialize_ciphertext(bytes, *ctx, windows[w].at("logical_len").get<std::size_t>(),
                                        windows[w].at("depth_used").get<int>());
        r.stored.windows.push_back(std::move(d.value));
        r.nonces.push_back(d.nonce);
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::CorruptData, (dir / "manifest.json").string() + ": " + e.what());
  }
  return out;
}

void save_params_store(const fs::path& path, const ParamsStore& store) {
  json arr = json::array();
  for (const auto& [id, p] : store) {
    arr.push_back({{"params_id", id},
                   {"m", p.m},
                   {"overlap", p.overlap},
                   {"c_range", p.c_range},
                   {"coeffs", p.coeffs},
                   {"exps", p.exps},
                   {"seed", p.seed}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_json(path, arr);
}

ParamsStore load_params_store(const fs::path& path) {
  const json arr = read_json(path);
  ParamsStore store;
  try {
    for (const json& j : arr) {
      PolyProtectParams p;
      p.m = j.at("m").get<int>();
      p.overlap = j.at("overlap").get<int>();
      p.c_range = j.at("c_range").get<int>();
      p.coeffs = j.at("coeffs").get<std::vector<int>>();
      p.exps = j.at("exps").get<std::vector<int>>();
      p.seed = j.at("seed").get<std::uint64_t>();
      p.validate();
      p.params_id = compute_params_id(p);
      if (j.contains("params_id") && j["params_id"].get<std::string>() != p.params_id) {
        raise(ErrorKind::CorruptData, "params_id does not match the stored parameters");
      }
      store.emplace(p.params_id, std::move(p));
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::CorruptData, path.string() + ": " + e.what());
  }
  return store;
}

}  // namespace fheprotect

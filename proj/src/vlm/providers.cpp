#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>

#include "attiqa/error.hpp"
#include "attiqa/hashing.hpp"
#include "attiqa/vlm.hpp"
#include "httplib.h"

namespace attiqa {

using nlohmann::json;

namespace {

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  return out.empty() ? "_" : out;
}

}  // namespace

CachingProvider::CachingProvider(std::unique_ptr<EmbeddingProvider> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir) / sanitize(inner_->id())) {
  std::filesystem::create_directories(dir_);
}

Embedding CachingProvider::lookup_or_compute(const std::string& key, const auto& compute) const {
  const auto path = dir_ / (key + ".bin");
  const std::size_t d = inner_->dim();
  {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      Embedding v(d);
      in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(d * sizeof(double)));
      if (in.gcount() == static_cast<std::streamsize>(d * sizeof(double)) && in.peek() == EOF) return v;
    }
  }
  Embedding v = compute();
  // Unique temp name per thread; rename publishes atomically.
  const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
  return v;
}

Embedding CachingProvider::embed_image(const ImageRaster& img) const {
  std::string blob = "image:" + std::to_string(img.height()) + "x" + std::to_string(img.width()) + ":";
  const auto px = img.pixels();
  blob.append(reinterpret_cast<const char*>(px.data()), px.size() * sizeof(double));
  return lookup_or_compute(sha256_hex(blob), [&] { return inner_->embed_image(img); });
}

Embedding CachingProvider::embed_text(std::string_view text) const {
  return lookup_or_compute(sha256_hex("text:" + std::string(text)), [&] { return inner_->embed_text(text); });
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string model_tag)
    : base_url_(std::move(base_url)), tag_(std::move(model_tag)) {
  if (base_url_.empty()) throw ValidationError("external provider needs a service URL");
  if (tag_.empty()) throw ValidationError("external provider needs a model tag");
}

Embedding HttpEmbeddingProvider::post(const std::string& route, const json& body) const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  auto res = client.Post(route, body.dump(), "application/json");
  if (!res) throw ProviderError("embedding service unreachable at " + base_url_);
  if (res->status != 200) {
    throw ProviderError("embedding service returned HTTP " + std::to_string(res->status));
  }
  Embedding v;
  try {
    v = json::parse(res->body).at("embedding").get<Embedding>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embedding response: ") + e.what());
  }
  if (v.empty()) throw ProviderError("embedding service returned an empty vector");
  normalize_embedding(v);
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) throw ProviderError("embedding dimension changed between calls");
  return v;
}

std::size_t HttpEmbeddingProvider::dim() const {
  if (dim_ == 0) embed_text("image");
  return dim_;
}

Embedding HttpEmbeddingProvider::embed_text(std::string_view text) const {
  return post("/embed/text", {{"model", tag_}, {"text", std::string(text)}});
}

Embedding HttpEmbeddingProvider::embed_image(const ImageRaster& img) const {
  json body = {{"model", tag_}, {"height", img.height()}, {"width", img.width()}};
  body["pixels"] = std::vector<double>(img.pixels().begin(), img.pixels().end());
  return post("/embed/image", body);
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view provider_id) {
  std::unique_ptr<EmbeddingProvider> p;
  constexpr std::string_view kExternal = "external-vlm:";
  if (provider_id == AnalyticMockProvider::kId) {
    p = std::make_unique<AnalyticMockProvider>();
  } else if (provider_id.substr(0, kExternal.size()) == kExternal) {
    const char* url = std::getenv("ATTIQA_VLM_URL");
    if (!url || !*url) throw ValidationError("external-vlm providers need ATTIQA_VLM_URL");
    p = std::make_unique<HttpEmbeddingProvider>(url, std::string(provider_id.substr(kExternal.size())));
  } else {
    throw ValidationError("unknown provider \"" + std::string(provider_id) + "\"");
  }
  if (const char* cache = std::getenv("ATTIQA_CACHE"); cache && *cache) {
    p = std::make_unique<CachingProvider>(std::move(p), cache);
  }
  return p;
}

}  // namespace attiqa

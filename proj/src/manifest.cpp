#include "primcodec/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "primcodec/errors.hpp"

namespace primcodec
{

std::string content_hash(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("content_hash: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  const std::string framed =
      "blob " + std::to_string(body.size()) + '\0' + body;

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("content_hash: EVP context failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, framed.data(), framed.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("content_hash: digest failed");
  }
  EVP_MD_CTX_free(ctx);

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_manifest(const RunManifest& manifest, const std::string& dir)
{
  namespace fs = std::filesystem;
  for (const auto& output : manifest.outputs)
    if (!fs::exists(output))
      throw IoError("write_manifest: missing output " + output);

  nlohmann::json doc = {{"command", manifest.command},
                        {"config", manifest.config},
                        {"input_hashes", manifest.input_hashes},
                        {"outputs", manifest.outputs},
                        {"wall_clock_sec", manifest.wall_clock_sec},
                        {"artifact_version", manifest.artifact_version}};
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("write_manifest: cannot write manifest.json");
  out << doc.dump(2) << "\n";
}

}  // namespace primcodec

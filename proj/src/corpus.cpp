#include <arpa/inet.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <set>
#include <sstream>

#include "devgeo/corpus.hpp"
#include "devgeo/errors.hpp"

namespace devgeo {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_valid_ip(std::string_view ip) {
  const std::string s(ip);
  unsigned char buf[16];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) return std::nullopt;
  return data;
}

}  // namespace

CorpusLoadResult load_corpus(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw CorpusError("corpus path does not exist: " + path.string());

  fs::path manifest = path;
  if (fs::is_directory(path, ec)) {
    manifest = path / "manifest.jsonl";
    if (!fs::exists(manifest, ec)) return {};
  }
  std::ifstream in(manifest);
  if (!in) throw CorpusError("cannot open manifest: " + manifest.string());
  const fs::path base = manifest.parent_path();

  CorpusLoadResult result;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  auto skip = [&](const std::string& why) {
    ++result.skipped;
    std::ostringstream msg;
    msg << manifest.filename().string() << ":" << lineno << ": " << why;
    result.diagnostics.push_back(msg.str());
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::parse_error& e) {
      skip(std::string("malformed manifest line: ") + e.what());
      continue;
    }
    if (!entry.is_object() || !entry.contains("page_id") || !entry["page_id"].is_string() ||
        !entry.contains("ip") || !entry["ip"].is_string() || !entry.contains("port") ||
        !entry["port"].is_number_integer() || !entry.contains("html_path") || !entry["html_path"].is_string()) {
      skip("missing or mistyped required field");
      continue;
    }
    PageRecord rec;
    rec.page_id = entry["page_id"].get<std::string>();
    rec.endpoint.ip = entry["ip"].get<std::string>();
    const auto port = entry["port"].get<long long>();
    if (rec.page_id.empty()) {
      skip("empty page_id");
      continue;
    }
    if (!is_valid_ip(rec.endpoint.ip)) {
      skip("invalid ip '" + rec.endpoint.ip + "'");
      continue;
    }
    if (port < 0 || port > 65535) {
      skip("port out of range");
      continue;
    }
    if (seen.count(rec.page_id)) {
      skip("duplicate page_id '" + rec.page_id + "'");
      continue;
    }
    rec.endpoint.port = static_cast<std::uint16_t>(port);
    const fs::path html_path = base / entry["html_path"].get<std::string>();
    auto html = read_file(html_path);
    if (!html) {
      skip("unreadable html file " + html_path.string());
      continue;
    }
    rec.html = std::move(*html);
    if (entry.contains("captured_at") && entry["captured_at"].is_string())
      rec.captured_at = entry["captured_at"].get<std::string>();
    if (entry.contains("source") && entry["source"].is_string()) rec.source = entry["source"].get<std::string>();
    seen.insert(rec.page_id);
    result.pages.push_back(std::move(rec));
  }

  std::sort(result.pages.begin(), result.pages.end(),
            [](const PageRecord& a, const PageRecord& b) { return a.page_id < b.page_id; });
  return result;
}

}  // namespace devgeo

#include "martsia/cas.hpp"

#include <unistd.h>

#include <fstream>

#include "martsia/errors.hpp"

namespace martsia::cas {

namespace fs = std::filesystem;

Locator locator_for(const Bytes& content) {
  return Locator{"cas:" + hex_encode(sha256(content))};
}

bool is_well_formed(const std::string& t) {
  if (t.size() != 68 || t.compare(0, 4, "cas:") != 0) return false;
  for (size_t i = 4; i < t.size(); ++i) {
    char c = t[i];
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Locator MemoryStore::put(const Bytes& content) {
  Locator loc = locator_for(content);
  std::lock_guard lock(mu_);
  objects_.emplace(loc.text, content);
  return loc;
}

Bytes MemoryStore::get(const Locator& loc) const {
  if (!is_well_formed(loc.text)) throw NotFound("malformed locator: " + loc.text);
  std::lock_guard lock(mu_);
  auto it = objects_.find(loc.text);
  if (it == objects_.end()) throw NotFound("no object for " + loc.text);
  if (locator_for(it->second) != loc)
    throw IntegrityFault("stored bytes do not hash to " + loc.text);
  return it->second;
}

DirStore::DirStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "objects");
}

fs::path DirStore::object_path(const std::string& hash) const {
  return root_ / "objects" / hash.substr(0, 2) / hash.substr(2);
}

Locator DirStore::put(const Bytes& content) {
  Locator loc = locator_for(content);
  std::string hash = loc.text.substr(4);
  fs::path target = object_path(hash);
  if (fs::exists(target)) return loc;
  fs::create_directories(target.parent_path());
  // write-then-rename so concurrent identical puts converge on one object
  fs::path tmp = target;
  tmp += ".tmp." + hex_encode(Rng(hash + std::to_string(::getpid())).bytes(6));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(content.data()),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("StorageFull: cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  return loc;
}

Bytes DirStore::get(const Locator& loc) const {
  if (!is_well_formed(loc.text)) throw NotFound("malformed locator: " + loc.text);
  fs::path target = object_path(loc.text.substr(4));
  std::ifstream in(target, std::ios::binary);
  if (!in) throw NotFound("no object for " + loc.text);
  Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (locator_for(content) != loc)
    throw IntegrityFault("stored bytes do not hash to " + loc.text);
  return content;
}

}  // namespace martsia::cas

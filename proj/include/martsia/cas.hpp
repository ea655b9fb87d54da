#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "martsia/common.hpp"

namespace martsia::cas {

// "cas:" + lowercase hex SHA-256 of the content; 68 characters total.
struct Locator {
  std::string text;
  bool operator==(const Locator&) const = default;
  auto operator<=>(const Locator&) const = default;
};

Locator locator_for(const Bytes& content);
bool is_well_formed(const std::string& locator_text);

class Store {
 public:
  virtual ~Store() = default;
  // Idempotent; concurrent puts of identical content converge to one object.
  virtual Locator put(const Bytes& content) = 0;
  // Throws NotFound / IntegrityFault (stored bytes no longer match).
  virtual Bytes get(const Locator& loc) const = 0;
};

class MemoryStore : public Store {
 public:
  Locator put(const Bytes& content) override;
  Bytes get(const Locator& loc) const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Bytes> objects_;
};

// Objects live at <root>/objects/<first2hex>/<restofhash>.
class DirStore : public Store {
 public:
  explicit DirStore(std::filesystem::path root);
  Locator put(const Bytes& content) override;
  Bytes get(const Locator& loc) const override;

 private:
  std::filesystem::path object_path(const std::string& hash) const;
  std::filesystem::path root_;
};

}  // namespace martsia::cas

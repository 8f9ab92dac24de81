#include "netobs/atomic_file.hpp"

#include <filesystem>
#include <fstream>

#include "netobs/error.hpp"

namespace netobs {

void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        body(out);
        out.flush();
        if (!out) throw Error("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw Error("rename '" + tmp + "' -> '" + path + "': " + ec.message());
    }
}

}  // namespace netobs

#ifndef RELAB_CSV_HPP
#define RELAB_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

#include "relab/common.hpp"

namespace relab {

/// Comma-separated output with a header row; floats at 17 significant digits
/// so repeated runs are byte-identical.
class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) body_ += ',';
            body_ += header[i];
        }
        body_ += '\n';
    }

    void row(const Vec& values) {
        if (values.size() != columns_) throw InvalidArgument("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_double(values[i]);
        }
        body_ += '\n';
    }

    const std::string& str() const { return body_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path);
        out << body_;
    }

private:
    std::size_t columns_;
    std::string body_;
};

} // namespace relab

#endif // RELAB_CSV_HPP

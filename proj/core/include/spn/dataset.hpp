#ifndef SPN_DATASET_HPP
#define SPN_DATASET_HPP

#include <span>
#include <string>
#include <vector>

#include "spn/inference.hpp"

namespace spn {

// Rectangular matrix of binary instances. Cells are stored as Mark so rows
// feed the evaluator directly; only False/True ever appear in a dataset.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t num_vars, std::vector<Mark> cells, std::string source = {});

    static Dataset from_rows(const std::vector<std::vector<int>>& rows);

    std::size_t num_vars() const { return num_vars_; }
    std::size_t num_instances() const { return num_vars_ ? cells_.size() / num_vars_ : 0; }
    bool empty() const { return cells_.empty(); }

    std::span<const Mark> row(std::size_t m) const {
        return {cells_.data() + m * num_vars_, num_vars_};
    }
    const std::string& source() const { return source_; }

private:
    std::size_t num_vars_ = 0;
    std::vector<Mark> cells_;
    std::string source_;
};

}  // namespace spn

#endif

#include "generators.hpp"

#include <cstdio>

namespace gen {

namespace {

std::string key(const std::string &prefix, int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    return prefix + buf;
}

}

polydawg::AssociativeArray random_assoc(Rng &rng, int rows, int cols, double density, bool real_values,
                                        const std::string &row_prefix, const std::string &col_prefix)
{
    std::bernoulli_distribution present(density);
    std::uniform_int_distribution<int> small(1, 9);
    std::uniform_real_distribution<double> real(-4.0, 4.0);
    polydawg::AssociativeArray a;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (present(rng)) {
                if (real_values) a.insert(key(row_prefix, i), key(col_prefix, j), polydawg::Value(real(rng)));
                else a.insert(key(row_prefix, i), key(col_prefix, j), polydawg::Value(std::int64_t(small(rng))));
            }
    return a;
}

polydawg::CanonicalTable random_table(Rng &rng, std::size_t rows, std::size_t cols, double null_rate,
                                      bool unique_first)
{
    using polydawg::Tag;
    using polydawg::Value;
    static const Tag tags[] = {Tag::integer, Tag::real, Tag::text};
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_int_distribution<std::int64_t> ints(-50, 50);
    std::uniform_real_distribution<double> reals(-100.0, 100.0);
    std::uniform_int_distribution<int> letters(0, 5);
    std::bernoulli_distribution is_null(null_rate);

    polydawg::CanonicalTable t;
    for (std::size_t c = 0; c < cols; ++c)
        t.schema.push_back({"k" + std::to_string(c), c == 0 ? Tag::integer : tags[pick(rng)]});
    for (std::size_t r = 0; r < rows; ++r) {
        polydawg::Row row;
        for (std::size_t c = 0; c < cols; ++c) {
            if (c == 0 and unique_first) { row.push_back(Value(std::int64_t(r))); continue; }
            if (is_null(rng)) { row.push_back(Value()); continue; }
            switch (t.schema[c].tag) {
                case Tag::integer: row.push_back(Value(ints(rng))); break;
                case Tag::real:    row.push_back(Value(reals(rng))); break;
                default: {
                    std::string s;
                    for (int n = letters(rng) + 1; n > 0; --n) s += char('a' + letters(rng));
                    if (letters(rng) == 0) s += ",\"|";
                    row.push_back(Value(s));
                }
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmp.h>

#include <ostream>
#include <string>

// gmpxx's iostream inserters normally live in libgmpxx; tests only need this
// one, so provide it here and link plain libgmp.
std::ostream& operator<<(std::ostream& os, mpz_srcptr value) {
    char* s = mpz_get_str(nullptr, 16, value);
    os << s;
    void (*freefunc)(void*, size_t) = nullptr;
    mp_get_memory_functions(nullptr, nullptr, &freefunc);
    freefunc(s, std::string(s).size() + 1);
    return os;
}

#include "translqr/experiment.hpp"

int main(int argc, char** argv) {
    return translqr::cli_main(argc, argv);
}

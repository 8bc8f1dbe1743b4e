#include <lvnet/app.hpp>

int main(int argc, char** argv) {
    return lvnet::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}

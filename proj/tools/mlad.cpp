#include <iostream>

int main() {
    std::cout << "mlad: subcommands not wired yet\n";
    return 0;
}

#include <iostream>

int main() {
    std::cout << "qgs: command line driver placeholder\n";
    return 0;
}

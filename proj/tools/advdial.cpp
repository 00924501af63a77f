// Placeholder CLI; filled in once the training stack exists.
#include <iostream>

int main() {
    std::cout << "advdial: not yet wired\n";
    return 0;
}

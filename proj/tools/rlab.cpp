#include <iostream>
int main() { std::cout << "rlab placeholder\n"; return 0; }

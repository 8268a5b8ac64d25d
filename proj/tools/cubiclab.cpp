#include "app.hpp"

int main(int argc, char** argv) { return cubiclab::app::main_entry(argc, argv); }

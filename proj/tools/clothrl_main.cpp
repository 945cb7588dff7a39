// placeholder; replaced when the harness lands
int main() { return 0; }

struct S { int x : 3; } s;
int main() { return s.x; }

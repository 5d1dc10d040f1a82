/* mini corpus file f18 */
int f18_value = 18;

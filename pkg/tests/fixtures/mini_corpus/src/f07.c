/* mini corpus file f07 */
int f07_value = 7;

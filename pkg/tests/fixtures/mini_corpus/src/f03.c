/* mini corpus file f03 */
int f03_value = 3;

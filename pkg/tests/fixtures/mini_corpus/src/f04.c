/* mini corpus file f04 */
int f04_value = 4;
